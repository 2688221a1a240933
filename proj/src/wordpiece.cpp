#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <set>

#include "textclf/error.hpp"
#include "textclf/features.hpp"
#include "textclf/transformer.hpp"
#include "unicode.hpp"

namespace textclf {

namespace {

constexpr std::array<std::string_view, WordPieceVocab::n_special> kSpecials = {
    "[PAD]", "[CLS]", "[SEP]", "[MASK]", "[UNK]"};

TokenizerConfig wordpiece_pretokenizer() {
  return TokenizerConfig{};  // lowercase, keep every word
}

// Splits a word into single-codepoint units, continuations prefixed ##.
std::vector<std::string> word_units(const std::string& word) {
  std::vector<std::string> units;
  size_t pos = 0;
  char32_t cp = 0;
  while (pos < word.size()) {
    const size_t start = pos;
    if (!unicode::decode_next(word, pos, cp)) {
      ++pos;
      continue;
    }
    std::string unit = units.empty() ? "" : "##";
    unit.append(word, start, pos - start);
    units.push_back(std::move(unit));
  }
  return units;
}

}  // namespace

std::optional<uint32_t> WordPieceVocab::lookup(std::string_view token) const {
  auto it = token_to_id.find(std::string(token));
  return it == token_to_id.end() ? std::nullopt : std::optional<uint32_t>(it->second);
}

WordPieceVocab train_wordpiece(const std::vector<std::string>& texts, size_t target_size) {
  if (target_size < WordPieceVocab::n_special + 1) {
    throw Error(errc::config_invalid, "wordpiece target size leaves no room for tokens");
  }
  const TokenizerConfig config = wordpiece_pretokenizer();
  std::map<std::string, size_t> word_counts;
  for (const std::string& text : texts) {
    for (std::string& word : tokenize(text, config)) ++word_counts[std::move(word)];
  }

  std::vector<std::pair<std::vector<std::string>, size_t>> words;
  words.reserve(word_counts.size());
  for (const auto& [word, count] : word_counts) {
    words.emplace_back(word_units(word), count);
  }

  auto distinct_units = [&] {
    std::set<std::string> units;
    for (const auto& [seq, count] : words) units.insert(seq.begin(), seq.end());
    return units;
  };

  while (true) {
    if (WordPieceVocab::n_special + distinct_units().size() >= target_size) break;

    std::map<std::pair<std::string, std::string>, size_t> pair_counts;
    for (const auto& [seq, count] : words) {
      for (size_t i = 0; i + 1 < seq.size(); ++i) {
        pair_counts[{seq[i], seq[i + 1]}] += count;
      }
    }
    const std::pair<std::string, std::string>* best = nullptr;
    size_t best_count = 1;  // a pair must repeat to be worth merging
    for (const auto& [pair, count] : pair_counts) {
      if (count > best_count) {
        best_count = count;
        best = &pair;
      }
    }
    if (!best) break;

    std::string merged = best->first + best->second.substr(2);  // strip the ## continuation
    for (auto& [seq, count] : words) {
      for (size_t i = 0; i + 1 < seq.size();) {
        if (seq[i] == best->first && seq[i + 1] == best->second) {
          seq[i] = merged;
          seq.erase(seq.begin() + static_cast<ptrdiff_t>(i) + 1);
        } else {
          ++i;
        }
      }
    }
  }

  WordPieceVocab vocab;
  for (std::string_view special : kSpecials) vocab.tokens.emplace_back(special);
  for (const std::string& unit : distinct_units()) vocab.tokens.push_back(unit);
  for (uint32_t id = 0; id < vocab.tokens.size(); ++id) {
    vocab.token_to_id[vocab.tokens[id]] = id;
  }
  return vocab;
}

void save_wordpiece(const WordPieceVocab& vocab, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(errc::missing_file, "cannot write vocab file: " + path.string());
  for (const std::string& token : vocab.tokens) out << token << '\n';
}

WordPieceVocab load_wordpiece(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::missing_file, "cannot open vocab file: " + path.string());

  WordPieceVocab vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (vocab.tokens.empty() && line.size() >= 3 && line[0] == '\xEF' && line[1] == '\xBB' &&
        line[2] == '\xBF') {
      line.erase(0, 3);
    }
    if (line.empty()) {
      throw Error(errc::bad_artifact, "vocab file " + path.string() + " has an empty line " +
                                          std::to_string(vocab.tokens.size() + 1));
    }
    const auto [it, inserted] =
        vocab.token_to_id.try_emplace(line, static_cast<uint32_t>(vocab.tokens.size()));
    if (!inserted) {
      throw Error(errc::bad_artifact, "vocab file " + path.string() + " repeats token " + line);
    }
    vocab.tokens.push_back(line);
  }
  if (vocab.tokens.size() < WordPieceVocab::n_special) {
    throw Error(errc::bad_artifact, "vocab file " + path.string() + " is missing special tokens");
  }
  for (size_t i = 0; i < kSpecials.size(); ++i) {
    if (vocab.tokens[i] != kSpecials[i]) {
      throw Error(errc::bad_artifact, "vocab file " + path.string() + " line " +
                                          std::to_string(i + 1) + " must be " +
                                          std::string(kSpecials[i]));
    }
  }
  return vocab;
}

std::vector<uint32_t> wordpiece_encode(const WordPieceVocab& vocab, std::string_view text) {
  std::vector<uint32_t> ids;
  for (const std::string& word : tokenize(text, wordpiece_pretokenizer())) {
    std::vector<uint32_t> pieces;
    size_t start = 0;
    bool failed = false;
    while (start < word.size()) {
      size_t end = word.size();
      std::optional<uint32_t> match;
      while (end > start) {
        std::string candidate = start == 0 ? "" : "##";
        candidate.append(word, start, end - start);
        if (auto id = vocab.lookup(candidate)) {
          match = id;
          break;
        }
        // back off one codepoint
        do {
          --end;
        } while (end > start && (static_cast<unsigned char>(word[end]) & 0xC0) == 0x80);
      }
      if (!match) {
        failed = true;
        break;
      }
      pieces.push_back(*match);
      start = end;
    }
    if (failed) {
      ids.push_back(WordPieceVocab::unk_id);
    } else {
      ids.insert(ids.end(), pieces.begin(), pieces.end());
    }
  }
  return ids;
}

namespace {

BatchEncoding assemble_row(const std::vector<uint32_t>& body_a, const std::vector<uint32_t>& body_b,
                           bool pair, size_t max_len) {
  BatchEncoding enc;
  enc.seq_len = max_len;
  std::vector<uint32_t> ids;
  std::vector<uint8_t> segments;
  ids.reserve(max_len);
  ids.push_back(WordPieceVocab::cls_id);
  ids.insert(ids.end(), body_a.begin(), body_a.end());
  ids.push_back(WordPieceVocab::sep_id);
  segments.assign(ids.size(), 0);
  if (pair) {
    ids.insert(ids.end(), body_b.begin(), body_b.end());
    ids.push_back(WordPieceVocab::sep_id);
    segments.resize(ids.size(), 1);
  }
  std::vector<uint8_t> mask(ids.size(), 1);
  ids.resize(max_len, WordPieceVocab::pad_id);
  mask.resize(max_len, 0);
  segments.resize(max_len, 0);

  enc.ids.push_back(std::move(ids));
  enc.mask.push_back(std::move(mask));
  enc.segments.push_back(std::move(segments));
  enc.mlm_targets.emplace_back(max_len, -1);
  return enc;
}

}  // namespace

BatchEncoding encode_sequence(std::string_view text, const WordPieceVocab& vocab, size_t max_len) {
  if (max_len < 2) {
    throw Error(errc::config_invalid, "max_len must fit [CLS] and [SEP]");
  }
  std::vector<uint32_t> body = wordpiece_encode(vocab, text);
  if (body.size() > max_len - 2) body.resize(max_len - 2);
  return assemble_row(body, {}, false, max_len);
}

BatchEncoding encode_pair(std::string_view first, std::string_view second,
                          const WordPieceVocab& vocab, size_t max_len) {
  if (max_len < 3) {
    throw Error(errc::config_invalid, "max_len must fit [CLS] and two [SEP]s");
  }
  std::vector<uint32_t> a = wordpiece_encode(vocab, first);
  std::vector<uint32_t> b = wordpiece_encode(vocab, second);
  const size_t budget = max_len - 3;
  while (a.size() + b.size() > budget) {
    if (a.size() > b.size()) {
      a.pop_back();
    } else {
      b.pop_back();
    }
  }
  return assemble_row(a, b, true, max_len);
}

BatchEncoding concat_rows(const std::vector<BatchEncoding>& rows) {
  if (rows.empty()) throw Error(errc::empty_input, "no rows to concatenate");
  BatchEncoding out;
  out.seq_len = rows.front().seq_len;
  for (const BatchEncoding& row : rows) {
    if (row.seq_len != out.seq_len) {
      throw Error(errc::shape_mismatch, "encoding rows have different sequence lengths");
    }
    out.ids.insert(out.ids.end(), row.ids.begin(), row.ids.end());
    out.mask.insert(out.mask.end(), row.mask.begin(), row.mask.end());
    out.segments.insert(out.segments.end(), row.segments.begin(), row.segments.end());
    out.mlm_targets.insert(out.mlm_targets.end(), row.mlm_targets.begin(), row.mlm_targets.end());
    out.nsp_labels.insert(out.nsp_labels.end(), row.nsp_labels.begin(), row.nsp_labels.end());
    out.class_labels.insert(out.class_labels.end(), row.class_labels.begin(),
                            row.class_labels.end());
  }
  return out;
}

BatchEncoding encode_min_batch(const std::vector<std::string>& texts,
                               const WordPieceVocab& vocab, size_t max_len) {
  if (max_len < 2) throw Error(errc::config_invalid, "max_len must fit [CLS] and [SEP]");
  size_t longest = 0;
  for (const std::string& text : texts) {
    longest = std::max(longest, wordpiece_encode(vocab, text).size());
  }
  const size_t len = std::max<size_t>(2, std::min(max_len, longest + 2));
  std::vector<BatchEncoding> rows;
  rows.reserve(texts.size());
  for (const std::string& text : texts) rows.push_back(encode_sequence(text, vocab, len));
  return concat_rows(rows);
}

}  // namespace textclf
