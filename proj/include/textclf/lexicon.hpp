#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>

#include "textclf/corpus.hpp"
#include "textclf/features.hpp"

namespace textclf {

struct PolarityLexicon {
  std::unordered_map<std::string, double> polarity;  // values in [-1, 1]
  double default_polarity = 0.0;

  size_t size() const { return polarity.size(); }
};

// UTF-8 TSV, one `token<TAB>polarity` per line, `#` comments and blank lines
// ignored. Later duplicates overwrite earlier ones.
PolarityLexicon load_lexicon(const std::filesystem::path& path);

// Mean polarity over the document's tokens; unknown tokens contribute
// default_polarity. An empty token list scores 0.0.
double polarity_score(const Document& doc, const PolarityLexicon& lex,
                      const TokenizerConfig& config);

// Label 0 (positive) iff polarity_score >= threshold, else 1.
uint32_t lexicon_classify(const Document& doc, const PolarityLexicon& lex, double threshold,
                          const TokenizerConfig& config);

}  // namespace textclf
