#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "textclf/corpus.hpp"
#include "textclf/sparse.hpp"

namespace textclf {

struct TokenizerConfig {
  bool lowercase = true;
  std::unordered_set<std::string> stopwords;
  size_t min_token_len = 1;
};

// Splits on Unicode whitespace and punctuation, applies simple lowercasing,
// then drops stop words and tokens shorter than min_token_len (counted in
// codepoints). Order is preserved; an empty result is valid.
std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config);

// One token per line, UTF-8, `#` comment lines and blank lines ignored.
std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path);

struct Vocabulary {
  std::unordered_map<std::string, uint32_t> token_to_index;
  std::vector<std::string> index_to_token;       // dense, first-appearance order
  std::vector<uint32_t> document_frequency;      // per index
  size_t n_documents = 0;

  size_t size() const { return index_to_token.size(); }
};

Vocabulary build_vocabulary(const LabeledCorpus& corpus, const TokenizerConfig& config);

// Entry (d, t) is the occurrence count of vocabulary token t in document d.
// Out-of-vocabulary tokens are ignored.
SparseMatrix count_vectorize(std::span<const Document> docs, const Vocabulary& vocab,
                             const TokenizerConfig& config);

// value(d,t) = count(d,t) * idf(t) with idf(t) = ln((1+N)/(1+df(t))) + 1 and
// N = vocab.n_documents; non-empty rows are L2-normalized.
SparseMatrix tfidf_transform(const SparseMatrix& counts, const Vocabulary& vocab);

double idf_value(size_t n_documents, size_t document_frequency);

}  // namespace textclf
