#include "unicode.hpp"

namespace textclf::unicode {

bool decode_next(std::string_view text, size_t& pos, char32_t& cp) {
  if (pos >= text.size()) return false;
  const auto byte = [&](size_t i) { return static_cast<unsigned char>(text[i]); };
  const unsigned char b0 = byte(pos);
  if (b0 < 0x80) {
    cp = b0;
    pos += 1;
    return true;
  }
  auto is_cont = [&](size_t i) {
    return i < text.size() && (byte(i) & 0xC0) == 0x80;
  };
  if ((b0 & 0xE0) == 0xC0) {
    if (b0 < 0xC2 || !is_cont(pos + 1)) return false;  // reject overlong
    cp = (static_cast<char32_t>(b0 & 0x1F) << 6) | (byte(pos + 1) & 0x3F);
    pos += 2;
    return true;
  }
  if ((b0 & 0xF0) == 0xE0) {
    if (!is_cont(pos + 1) || !is_cont(pos + 2)) return false;
    const char32_t c = (static_cast<char32_t>(b0 & 0x0F) << 12) |
                       (static_cast<char32_t>(byte(pos + 1) & 0x3F) << 6) |
                       (byte(pos + 2) & 0x3F);
    if (c < 0x800 || (c >= 0xD800 && c <= 0xDFFF)) return false;
    cp = c;
    pos += 3;
    return true;
  }
  if ((b0 & 0xF8) == 0xF0) {
    if (!is_cont(pos + 1) || !is_cont(pos + 2) || !is_cont(pos + 3)) return false;
    const char32_t c = (static_cast<char32_t>(b0 & 0x07) << 18) |
                       (static_cast<char32_t>(byte(pos + 1) & 0x3F) << 12) |
                       (static_cast<char32_t>(byte(pos + 2) & 0x3F) << 6) |
                       (byte(pos + 3) & 0x3F);
    if (c < 0x10000 || c > 0x10FFFF) return false;
    cp = c;
    pos += 4;
    return true;
  }
  return false;
}

bool is_valid_utf8(std::string_view text) {
  size_t pos = 0;
  char32_t cp;
  while (pos < text.size()) {
    if (!decode_next(text, pos, cp)) return false;
  }
  return true;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_space(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
    case 0x20: case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_separator(char32_t cp) {
  if (is_space(cp)) return true;
  if (cp < 0x80) {
    const bool alnum = (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
                       (cp >= 'A' && cp <= 'Z');
    return !alnum;
  }
  switch (cp) {
    case 0xA1: case 0xA6: case 0xA7: case 0xAB: case 0xB6: case 0xB7:
    case 0xBB: case 0xBF: case 0xD7: case 0xF7:
      return true;
    default:
      break;
  }
  if (cp >= 0x2010 && cp <= 0x2027) return true;   // dashes, quotes, bullets
  if (cp >= 0x2030 && cp <= 0x205E) return true;   // general punctuation
  if (cp >= 0x2E00 && cp <= 0x2E7F) return true;   // supplemental punctuation
  if (cp >= 0x3001 && cp <= 0x303F) return true;   // CJK punctuation
  if (cp >= 0xFF01 && cp <= 0xFF0F) return true;   // fullwidth punctuation
  if (cp >= 0xFF1A && cp <= 0xFF20) return true;
  if (cp >= 0xFF3B && cp <= 0xFF40) return true;
  if (cp >= 0xFF5B && cp <= 0xFF65) return true;
  return false;
}

char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;  // Latin-1
  if (cp >= 0x0100 && cp <= 0x012F) return (cp % 2 == 0) ? cp + 1 : cp;
  if (cp == 0x0130) return 0x69;  // dotted capital I; simple mapping
  if (cp >= 0x0132 && cp <= 0x0137) return (cp % 2 == 0) ? cp + 1 : cp;
  if (cp >= 0x0139 && cp <= 0x0148) return (cp % 2 == 1) ? cp + 1 : cp;
  if (cp >= 0x014A && cp <= 0x0177) return (cp % 2 == 0) ? cp + 1 : cp;
  if (cp == 0x0178) return 0xFF;
  if (cp >= 0x0179 && cp <= 0x017E) return (cp % 2 == 1) ? cp + 1 : cp;
  if (cp >= 0x0391 && cp <= 0x03A9 && cp != 0x03A2) return cp + 0x20;  // Greek
  if (cp >= 0x0410 && cp <= 0x042F) return cp + 0x20;                  // Cyrillic
  if (cp >= 0x0400 && cp <= 0x040F) return cp + 0x50;
  return cp;
}

std::string lowercase_utf8(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  size_t pos = 0;
  char32_t cp;
  while (pos < text.size()) {
    if (!decode_next(text, pos, cp)) {
      out.push_back(text[pos]);
      ++pos;
      continue;
    }
    append_utf8(out, to_lower(cp));
  }
  return out;
}

}  // namespace textclf::unicode
