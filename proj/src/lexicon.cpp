#include "textclf/lexicon.hpp"

#include <charconv>
#include <fstream>

#include "textclf/error.hpp"
#include "unicode.hpp"

namespace textclf {

PolarityLexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::missing_file, "cannot open lexicon file: " + path.string());

  PolarityLexicon lex;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.size() >= 3 && line[0] == '\xEF' && line[1] == '\xBB' &&
        line[2] == '\xBF') {
      line.erase(0, 3);
    }
    if (line.empty() || line[0] == '#') continue;

    auto fail = [&](errc code, const std::string& what) -> Error {
      return Error(code, "lexicon file " + path.string() + " line " + std::to_string(line_no) +
                             ": " + what);
    };

    size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw fail(errc::malformed_row, "expected token<TAB>polarity");
    }
    std::string token = line.substr(0, tab);
    std::string value = line.substr(tab + 1);
    if (value.empty() || value.find('\t') != std::string::npos) {
      throw fail(errc::malformed_row, "expected exactly two tab-separated fields");
    }
    if (!unicode::is_valid_utf8(token)) {
      throw fail(errc::malformed_row, "token is not valid UTF-8");
    }
    double polarity = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), polarity);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
      throw fail(errc::malformed_row, "polarity is not a number: " + value);
    }
    if (!(polarity >= -1.0 && polarity <= 1.0)) {
      throw fail(errc::polarity_out_of_range, "polarity " + value + " outside [-1, 1]");
    }
    lex.polarity[std::move(token)] = polarity;
  }
  return lex;
}

double polarity_score(const Document& doc, const PolarityLexicon& lex,
                      const TokenizerConfig& config) {
  std::vector<std::string> tokens = tokenize(doc.text, config);
  if (tokens.empty()) return 0.0;
  double sum = 0.0;
  for (const std::string& tok : tokens) {
    auto it = lex.polarity.find(tok);
    sum += it != lex.polarity.end() ? it->second : lex.default_polarity;
  }
  return sum / static_cast<double>(tokens.size());
}

uint32_t lexicon_classify(const Document& doc, const PolarityLexicon& lex, double threshold,
                          const TokenizerConfig& config) {
  return polarity_score(doc, lex, config) >= threshold ? 0u : 1u;
}

}  // namespace textclf
