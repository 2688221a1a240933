#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "textclf/corpus.hpp"
#include "textclf/lexicon.hpp"
#include "textclf/sparse.hpp"

namespace textclf {

struct NumericDataset {
  SparseMatrix x;
  std::vector<uint32_t> y;
  std::vector<std::string> label_names;
};

// Two uniform square clouds around (0,0) and (4,4); linearly separable with
// a wide margin.
NumericDataset make_blobs(size_t n, uint64_t seed);

// Concentric rings of radius 1 and 3 with light radial noise.
NumericDataset make_circles(size_t n, uint64_t seed);

// Two interleaved half-moons, the classic nonlinear benchmark shape.
NumericDataset make_moons(size_t n, uint64_t seed);

// Balanced two-class corpus where a single keyword decides the label.
LabeledCorpus make_keyword_corpus(size_t n, uint64_t seed);

// Fixed memorizable sentences for pretraining demos.
std::vector<std::string> pretrain_sentences();

PolarityLexicon demo_lexicon();

// Documents labeled by the demo lexicon's own scorer, threshold 0.
LabeledCorpus make_lexicon_corpus(size_t n, uint64_t seed);

std::vector<std::string> demo_stopwords();

// Numeric datasets travel as corpora whose text is the comma-joined feature
// row, so splitting and artifacts reuse the text pipeline.
LabeledCorpus to_corpus(const NumericDataset& data);
std::vector<double> parse_numeric_row(std::string_view text, size_t expected_dim);
NumericDataset corpus_to_numeric(const LabeledCorpus& corpus);

// CSV with header f0,...,f{k-1},label.
void write_numeric_csv(const NumericDataset& data, const std::filesystem::path& path);
LabeledCorpus load_numeric_corpus(const std::filesystem::path& path);

// CSV with header text,label, RFC 4180 quoting.
void write_corpus_csv(const LabeledCorpus& corpus, const std::filesystem::path& path);
void write_lexicon_tsv(const PolarityLexicon& lexicon, const std::filesystem::path& path);
void write_lines(const std::vector<std::string>& lines, const std::filesystem::path& path);

}  // namespace textclf
