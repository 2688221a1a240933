#include "textclf/features.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include "textclf/error.hpp"
#include "unicode.hpp"

namespace textclf {

std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config) {
  std::vector<std::string> out;
  std::string current;
  size_t current_len = 0;  // codepoints

  auto flush = [&] {
    if (current.empty()) return;
    if (current_len >= config.min_token_len && !config.stopwords.contains(current)) {
      out.push_back(current);
    }
    current.clear();
    current_len = 0;
  };

  size_t pos = 0;
  char32_t cp = 0;
  while (pos < text.size()) {
    if (!unicode::decode_next(text, pos, cp)) {
      // malformed byte: treat as a separator and move on
      ++pos;
      flush();
      continue;
    }
    if (unicode::is_separator(cp)) {
      flush();
      continue;
    }
    if (config.lowercase) cp = unicode::to_lower(cp);
    unicode::append_utf8(current, cp);
    ++current_len;
  }
  flush();
  return out;
}

std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::missing_file, "cannot open stopword file: " + path.string());

  std::unordered_set<std::string> words;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.size() >= 3 && line[0] == '\xEF' && line[1] == '\xBB' &&
        line[2] == '\xBF') {
      line.erase(0, 3);
    }
    size_t begin = line.find_first_not_of(" \t");
    if (begin == std::string::npos) continue;
    size_t end = line.find_last_not_of(" \t");
    std::string word = line.substr(begin, end - begin + 1);
    if (word.empty() || word[0] == '#') continue;
    if (!unicode::is_valid_utf8(word)) {
      throw Error(errc::malformed_row,
                  "stopword file " + path.string() + " line " + std::to_string(line_no) +
                      ": invalid UTF-8");
    }
    words.insert(std::move(word));
  }
  return words;
}

Vocabulary build_vocabulary(const LabeledCorpus& corpus, const TokenizerConfig& config) {
  if (corpus.documents.empty()) throw Error(errc::empty_corpus, "cannot build vocabulary from empty corpus");

  Vocabulary vocab;
  vocab.n_documents = corpus.documents.size();
  std::unordered_set<std::string> seen_in_doc;
  for (const Document& doc : corpus.documents) {
    seen_in_doc.clear();
    for (std::string& tok : tokenize(doc.text, config)) {
      auto [it, inserted] =
          vocab.token_to_index.try_emplace(tok, static_cast<uint32_t>(vocab.index_to_token.size()));
      if (inserted) {
        vocab.index_to_token.push_back(tok);
        vocab.document_frequency.push_back(0);
      }
      if (seen_in_doc.insert(std::move(tok)).second) {
        ++vocab.document_frequency[it->second];
      }
    }
  }
  if (vocab.index_to_token.empty()) {
    throw Error(errc::empty_vocabulary, "no tokens survived tokenization");
  }
  return vocab;
}

SparseMatrix count_vectorize(std::span<const Document> docs, const Vocabulary& vocab,
                             const TokenizerConfig& config) {
  if (vocab.index_to_token.empty()) {
    throw Error(errc::empty_vocabulary, "cannot vectorize with an empty vocabulary");
  }
  std::vector<size_t> offsets{0};
  std::vector<uint32_t> cols;
  std::vector<double> vals;
  offsets.reserve(docs.size() + 1);

  std::map<uint32_t, double> row;  // ordered so columns come out sorted
  for (const Document& doc : docs) {
    row.clear();
    for (const std::string& tok : tokenize(doc.text, config)) {
      auto it = vocab.token_to_index.find(tok);
      if (it != vocab.token_to_index.end()) row[it->second] += 1.0;
    }
    for (auto& [col, count] : row) {
      cols.push_back(col);
      vals.push_back(count);
    }
    offsets.push_back(cols.size());
  }
  return SparseMatrix(docs.size(), vocab.index_to_token.size(), std::move(offsets),
                      std::move(cols), std::move(vals));
}

double idf_value(size_t n_documents, size_t document_frequency) {
  return std::log((1.0 + static_cast<double>(n_documents)) /
                  (1.0 + static_cast<double>(document_frequency))) +
         1.0;
}

SparseMatrix tfidf_transform(const SparseMatrix& counts, const Vocabulary& vocab) {
  if (counts.cols() != vocab.index_to_token.size()) {
    throw Error(errc::dimension_mismatch, "count matrix does not match vocabulary size");
  }
  if (vocab.n_documents == 0) {
    throw Error(errc::empty_vocabulary, "vocabulary has no document statistics");
  }

  std::vector<size_t> offsets(counts.offsets().begin(), counts.offsets().end());
  std::vector<uint32_t> cols(counts.col_indices().begin(), counts.col_indices().end());
  std::vector<double> vals(counts.values().begin(), counts.values().end());

  for (size_t r = 0; r < counts.rows(); ++r) {
    size_t begin = offsets[r], end = offsets[r + 1];
    double sq = 0.0;
    for (size_t k = begin; k < end; ++k) {
      vals[k] *= idf_value(vocab.n_documents, vocab.document_frequency[cols[k]]);
      sq += vals[k] * vals[k];
    }
    if (sq > 0.0) {
      double inv = 1.0 / std::sqrt(sq);
      for (size_t k = begin; k < end; ++k) vals[k] *= inv;
    }
  }
  return SparseMatrix(counts.rows(), counts.cols(), std::move(offsets), std::move(cols),
                      std::move(vals));
}

}  // namespace textclf
