#include "textclf/fixtures.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>

#include "textclf/error.hpp"
#include "textclf/features.hpp"
#include "textclf/rng.hpp"

namespace textclf {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

NumericDataset from_points(std::vector<std::vector<double>> points, std::vector<uint32_t> y) {
  NumericDataset data;
  data.x = SparseMatrix::from_dense(points);
  data.y = std::move(y);
  data.label_names = {"0", "1"};
  return data;
}

}  // namespace

NumericDataset make_blobs(size_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> points;
  std::vector<uint32_t> y;
  for (size_t i = 0; i < n; ++i) {
    const uint32_t label = i % 2;
    const double center = label == 0 ? 0.0 : 4.0;
    points.push_back({center + rng.next_double() - 0.5, center + rng.next_double() - 0.5});
    y.push_back(label);
  }
  return from_points(std::move(points), std::move(y));
}

NumericDataset make_circles(size_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> points;
  std::vector<uint32_t> y;
  for (size_t i = 0; i < n; ++i) {
    const uint32_t label = i % 2;
    const double radius = (label == 0 ? 1.0 : 3.0) + 0.2 * (rng.next_double() - 0.5);
    const double angle = 2.0 * std::numbers::pi * rng.next_double();
    points.push_back({radius * std::cos(angle), radius * std::sin(angle)});
    y.push_back(label);
  }
  return from_points(std::move(points), std::move(y));
}

NumericDataset make_moons(size_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> points;
  std::vector<uint32_t> y;
  const size_t per_class = std::max<size_t>(1, n / 2);
  for (size_t i = 0; i < n; ++i) {
    const uint32_t label = i % 2;
    const double t = std::numbers::pi * static_cast<double>(i / 2) /
                     static_cast<double>(std::max<size_t>(1, per_class - 1));
    double px, py;
    if (label == 0) {
      px = std::cos(t);
      py = std::sin(t);
    } else {
      px = 1.0 - std::cos(t);
      py = 0.5 - std::sin(t);
    }
    px += 0.2 * (rng.next_double() - 0.5);
    py += 0.2 * (rng.next_double() - 0.5);
    points.push_back({px, py});
    y.push_back(label);
  }
  return from_points(std::move(points), std::move(y));
}

namespace {

const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = {
      "bu",    "film",   "izledim", "sahne", "oyuncu", "konu",  "akşam",
      "yine",  "sonra",  "sinema",  "uzun",  "yeni",   "bence", "ama",
      "bütün", "hikaye", "müzik",   "başrol"};
  return words;
}

}  // namespace

LabeledCorpus make_keyword_corpus(size_t n, uint64_t seed) {
  Rng rng(seed);
  const auto& fillers = filler_words();
  LabeledCorpus corpus;
  corpus.label_names = {"pozitif", "negatif"};
  for (size_t i = 0; i < n; ++i) {
    const uint32_t label = i % 2;
    const size_t length = 5 + rng.uniform_index(4);
    std::vector<std::string> words;
    for (size_t w = 0; w < length; ++w) {
      words.push_back(fillers[rng.uniform_index(fillers.size())]);
    }
    words[rng.uniform_index(words.size())] = label == 0 ? "harika" : "berbat";
    std::string text;
    for (size_t w = 0; w < words.size(); ++w) {
      if (w) text += ' ';
      text += words[w];
    }
    corpus.documents.push_back({i, std::move(text), label});
  }
  return corpus;
}

std::vector<std::string> pretrain_sentences() {
  return {
      "bu film gerçekten çok güzel bir film",
      "dün akşam sinemada yeni bir film izledik",
      "oyuncular rollerini çok iyi oynadı",
      "hikaye baştan sona sürükleyici ilerliyor",
      "müzikler sahnelere ayrı bir hava katıyor",
      "yönetmen bu kez izleyiciyi şaşırtmayı başardı",
      "filmin sonu beni gerçekten çok etkiledi",
      "senaryo bazı yerlerde biraz yavaş kalıyor",
      "görüntüler büyük ekranda harika duruyor",
      "karakterler inandırıcı ve sıcak yazılmış",
      "bu kitap uzun zamandır okuduğum en iyi kitap",
      "yazar her bölümde merakı canlı tutuyor",
      "çeviri akıcı olduğu için kitap rahat okunuyor",
      "kapak tasarımı rafta hemen göze çarpıyor",
      "bu dizi her bölümde daha da güzelleşiyor",
      "final bölümü izleyenleri ikiye böldü",
      "yeni sezon eskisinden çok daha iddialı görünüyor",
      "fragman çıktığı gün milyonlarca kez izlendi",
      "salondaki herkes film bitince alkışladı",
      "biletler daha ilk günden tamamen tükendi",
  };
}

PolarityLexicon demo_lexicon() {
  PolarityLexicon lex;
  lex.polarity = {
      {"harika", 0.9},     {"muhteşem", 0.85},  {"mükemmel", 0.95}, {"güzel", 0.6},
      {"etkileyici", 0.7}, {"başarılı", 0.65},  {"keyifli", 0.55},  {"sürükleyici", 0.5},
      {"berbat", -0.8},    {"rezalet", -0.9},   {"korkunç", -0.85}, {"kötü", -0.7},
      {"sıkıcı", -0.6},    {"vasat", -0.4},     {"zayıf", -0.5},    {"yavan", -0.45},
  };
  return lex;
}

LabeledCorpus make_lexicon_corpus(size_t n, uint64_t seed) {
  Rng rng(seed);
  const PolarityLexicon lex = demo_lexicon();
  std::vector<std::string> positive, negative;
  for (const auto& [token, polarity] : std::map<std::string, double>(lex.polarity.begin(),
                                                                     lex.polarity.end())) {
    (polarity > 0 ? positive : negative).push_back(token);
  }
  const auto& fillers = filler_words();
  const TokenizerConfig tok_config;

  LabeledCorpus corpus;
  corpus.label_names = {"pozitif", "negatif"};
  for (size_t i = 0; i < n; ++i) {
    const auto& charged = i % 2 == 0 ? positive : negative;
    const size_t length = 4 + rng.uniform_index(4);
    std::vector<std::string> words;
    for (size_t w = 0; w < length; ++w) {
      words.push_back(fillers[rng.uniform_index(fillers.size())]);
    }
    words[rng.uniform_index(words.size())] = charged[rng.uniform_index(charged.size())];
    std::string text;
    for (size_t w = 0; w < words.size(); ++w) {
      if (w) text += ' ';
      text += words[w];
    }
    Document doc{i, std::move(text), std::nullopt};
    doc.label = lexicon_classify(doc, lex, 0.0, tok_config);
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

std::vector<std::string> demo_stopwords() {
  return {"ve", "bir", "bu", "da", "de", "ile", "için", "ki", "ne", "o"};
}

LabeledCorpus to_corpus(const NumericDataset& data) {
  LabeledCorpus corpus;
  corpus.label_names = data.label_names;
  for (size_t i = 0; i < data.x.rows(); ++i) {
    std::string text;
    const SparseRow row = data.x.row(i);
    size_t k = 0;
    for (size_t c = 0; c < data.x.cols(); ++c) {
      if (c) text += ',';
      if (k < row.nnz() && row.cols[k] == c) {
        text += fmt_double(row.vals[k]);
        ++k;
      } else {
        text += '0';
      }
    }
    corpus.documents.push_back({i, std::move(text), data.y[i]});
  }
  return corpus;
}

std::vector<double> parse_numeric_row(std::string_view text, size_t expected_dim) {
  std::vector<double> values;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view field = text.substr(start, end - start);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
      throw Error(errc::malformed_row, "not a number: " + std::string(field));
    }
    values.push_back(v);
    if (end == text.size()) break;
    start = end + 1;
  }
  if (expected_dim != 0 && values.size() != expected_dim) {
    throw Error(errc::dimension_mismatch,
                "expected " + std::to_string(expected_dim) + " features, got " +
                    std::to_string(values.size()));
  }
  return values;
}

NumericDataset corpus_to_numeric(const LabeledCorpus& corpus) {
  if (corpus.documents.empty()) throw Error(errc::empty_corpus, "no rows");
  NumericDataset data;
  data.label_names = corpus.label_names;
  std::vector<std::vector<double>> dense;
  const size_t dim = parse_numeric_row(corpus.documents.front().text, 0).size();
  for (const Document& doc : corpus.documents) {
    dense.push_back(parse_numeric_row(doc.text, dim));
    if (!doc.label) throw Error(errc::unlabeled_document, "numeric rows must carry labels");
    data.y.push_back(*doc.label);
  }
  data.x = SparseMatrix::from_dense(dense);
  return data;
}

void write_numeric_csv(const NumericDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(errc::missing_file, "cannot write " + path.string());
  for (size_t c = 0; c < data.x.cols(); ++c) out << 'f' << c << ',';
  out << "label\n";
  const LabeledCorpus as_corpus = to_corpus(data);
  for (const Document& doc : as_corpus.documents) {
    out << doc.text << ',' << data.label_names[*doc.label] << '\n';
  }
}

LabeledCorpus load_numeric_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::missing_file, path.string());

  LabeledCorpus corpus;
  std::map<std::string, uint32_t> codes;
  std::string line;
  size_t line_no = 0;
  size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
      size_t count = 0;
      size_t start = 0;
      while (true) {
        size_t end = line.find(',', start);
        std::string field = line.substr(start, end - start);
        if (end == std::string::npos) {
          if (field != "label") {
            throw Error(errc::malformed_row, "numeric header must end with `label`");
          }
          break;
        }
        if (field != "f" + std::to_string(count)) {
          throw Error(errc::malformed_row, "numeric header must name columns f0,f1,...");
        }
        ++count;
        start = end + 1;
      }
      if (count == 0) throw Error(errc::malformed_row, "numeric header has no feature columns");
      dim = count;
      continue;
    }
    if (line.empty()) continue;
    const size_t last_comma = line.rfind(',');
    if (last_comma == std::string::npos) {
      throw Error(errc::malformed_row, "line " + std::to_string(line_no) + ": missing label");
    }
    std::string features = line.substr(0, last_comma);
    std::string name = line.substr(last_comma + 1);
    parse_numeric_row(features, dim);  // validate eagerly with a line number
    auto it = codes.find(name);
    if (it == codes.end()) {
      it = codes.emplace(name, static_cast<uint32_t>(corpus.label_names.size())).first;
      corpus.label_names.push_back(name);
    }
    corpus.documents.push_back({corpus.documents.size(), std::move(features), it->second});
  }
  if (corpus.documents.empty()) throw Error(errc::empty_corpus, path.string());
  return corpus;
}

void write_corpus_csv(const LabeledCorpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(errc::missing_file, "cannot write " + path.string());
  auto quoted = [](const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string q = "\"";
    for (char c : field) {
      if (c == '"') q += '"';
      q += c;
    }
    q += '"';
    return q;
  };
  out << "text,label\n";
  for (const Document& doc : corpus.documents) {
    if (!doc.label) throw Error(errc::unlabeled_document, "document " + std::to_string(doc.id));
    out << quoted(doc.text) << ',' << quoted(corpus.label_names[*doc.label]) << '\n';
  }
}

void write_lexicon_tsv(const PolarityLexicon& lexicon, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(errc::missing_file, "cannot write " + path.string());
  const std::map<std::string, double> sorted(lexicon.polarity.begin(), lexicon.polarity.end());
  for (const auto& [token, polarity] : sorted) {
    out << token << '\t' << fmt_double(polarity) << '\n';
  }
}

void write_lines(const std::vector<std::string>& lines, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(errc::missing_file, "cannot write " + path.string());
  for (const std::string& line : lines) out << line << '\n';
}

}  // namespace textclf
