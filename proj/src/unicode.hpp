#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace textclf::unicode {

// Decodes one UTF-8 sequence starting at text[pos]. On success advances pos
// and stores the codepoint; on malformed input returns false with pos
// untouched.
bool decode_next(std::string_view text, size_t& pos, char32_t& cp);

bool is_valid_utf8(std::string_view text);

void append_utf8(std::string& out, char32_t cp);

// Unicode whitespace (Zs plus the usual control separators).
bool is_space(char32_t cp);

// Token separator: whitespace, control, and punctuation/symbol characters.
// ASCII is classified exactly; beyond ASCII the common punctuation blocks
// are covered and everything else counts as a word character.
bool is_separator(char32_t cp);

// Locale-independent simple lowercase over ASCII, Latin-1, Latin Extended-A,
// Greek and Cyrillic base ranges. Other codepoints map to themselves.
char32_t to_lower(char32_t cp);

std::string lowercase_utf8(std::string_view text);

}  // namespace textclf::unicode
