#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "oracles.hpp"
#include "textclf/corpus.hpp"
#include "textclf/error.hpp"
#include "textclf/features.hpp"
#include "textclf/rng.hpp"
#include "textclf/sparse.hpp"

using namespace textclf;
using testutil::TempDir;
using testutil::expect_error;
using testutil::write_file;

namespace {

const std::vector<std::string> kAlphabet{"elma",  "armut", "kitap", "film", "deniz",
                                         "yildiz", "kalem", "okul",  "sehir", "kapi",
                                         "masa",  "cam",   "kus",   "yol",   "ay"};

// Random ASCII documents; token lists are returned alongside the corpus so
// dense oracles can count without re-tokenizing.
std::pair<LabeledCorpus, std::vector<std::vector<std::string>>> random_corpus(size_t n_docs,
                                                                              uint64_t seed) {
  Rng rng(seed);
  LabeledCorpus corpus;
  corpus.label_names = {"a", "b"};
  std::vector<std::vector<std::string>> tokens(n_docs);
  for (size_t d = 0; d < n_docs; ++d) {
    if (d == 7) {
      // keep one empty document in the mix
    } else {
      const size_t len = 3 + rng.uniform_index(10);
      for (size_t i = 0; i < len; ++i) tokens[d].push_back(kAlphabet[rng.uniform_index(kAlphabet.size())]);
    }
    std::string text;
    for (const std::string& t : tokens[d]) {
      if (!text.empty()) text += ' ';
      text += t;
    }
    Document doc;
    doc.id = d;
    doc.text = text;
    doc.label = static_cast<uint32_t>(d % 2);
    corpus.documents.push_back(doc);
  }
  return {corpus, tokens};
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("tokenize strips punctuation and stop words") {
  TokenizerConfig config;
  config.stopwords = {"bir"};
  CHECK(tokenize("Harika bir film!", config) ==
        std::vector<std::string>{"harika", "film"});
  CHECK(tokenize("", config).empty());
  CHECK(tokenize("   \t\n ", config).empty());
}

TEST_CASE("tokenize matches a hand-tokenized paragraph") {
  const std::string paragraph =
      "Bu film, GERÇEKTEN harika bir başyapıt! Senaryo akıcı; oyunculuk üst düzey.\n"
      "Görüntü yönetmeni 2022'de ödül almış - hiç şaşırmadım.\t\"Müzikler\" ise (bana göre) "
      "biraz zayıf kalmış...\n"
      "Yine de, toplamda çok etkileyici: kesinlikle tavsiye ederim! Puanım 9/10. "
      "Ömür törpüsü değil çünkü ÇOK sürükleyici.";
  const std::vector<std::string> expected{
      "bu",       "film",     "gerçekten", "harika",     "bir",       "başyapıt",
      "senaryo",  "akıcı",    "oyunculuk", "üst",        "düzey",     "görüntü",
      "yönetmeni", "2022",    "de",        "ödül",       "almış",     "hiç",
      "şaşırmadım", "müzikler", "ise",     "bana",       "göre",      "biraz",
      "zayıf",    "kalmış",   "yine",      "de",         "toplamda",  "çok",
      "etkileyici", "kesinlikle", "tavsiye", "ederim",   "puanım",    "9",
      "10",       "ömür",     "törpüsü",   "değil",      "çünkü",     "çok",
      "sürükleyici"};
  CHECK(tokenize(paragraph, TokenizerConfig{}) == expected);
}

TEST_CASE("tokenize counts min_token_len in codepoints") {
  TokenizerConfig config;
  config.min_token_len = 3;
  // çç is four bytes but only two codepoints.
  CHECK(tokenize("çç ççç ab abc", config) == std::vector<std::string>{"ççç", "abc"});
}

TEST_CASE("tokenize can keep case") {
  TokenizerConfig config;
  config.lowercase = false;
  CHECK(tokenize("Harika Film", config) == std::vector<std::string>{"Harika", "Film"});
}

TEST_CASE("load_stopwords skips comments and blank lines") {
  TempDir tmp;
  write_file(tmp.file("stop.txt"), "# comment\nve\n\n  bir  \nbu\r\n");
  const auto words = load_stopwords(tmp.file("stop.txt"));
  CHECK(words.size() == 3);
  CHECK(words.contains("ve"));
  CHECK(words.contains("bir"));
  CHECK(words.contains("bu"));
  expect_error(errc::missing_file, [&] { load_stopwords(tmp.file("nope.txt")); });
}

TEST_CASE("build_vocabulary assigns first-appearance indices") {
  LabeledCorpus corpus;
  corpus.label_names = {"x"};
  corpus.documents = {{0, "a b", 0}, {1, "b c", 0}};
  const Vocabulary vocab = build_vocabulary(corpus, TokenizerConfig{});

  REQUIRE(vocab.size() == 3);
  CHECK(vocab.index_to_token == std::vector<std::string>{"a", "b", "c"});
  CHECK(vocab.document_frequency == std::vector<uint32_t>{1, 2, 1});
  CHECK(vocab.n_documents == 2);
}

TEST_CASE("build_vocabulary counts documents not occurrences") {
  LabeledCorpus corpus;
  corpus.label_names = {"x"};
  corpus.documents = {{0, "x x x", 0}};
  const Vocabulary vocab = build_vocabulary(corpus, TokenizerConfig{});
  REQUIRE(vocab.size() == 1);
  CHECK(vocab.document_frequency[0] == 1);
}

TEST_CASE("build_vocabulary fails when nothing survives filtering") {
  LabeledCorpus corpus;
  corpus.label_names = {"x"};
  corpus.documents = {{0, "ve bir", 0}};
  TokenizerConfig config;
  config.stopwords = {"ve", "bir"};
  expect_error(errc::empty_vocabulary, [&] { build_vocabulary(corpus, config); });
  expect_error(errc::empty_corpus, [&] { build_vocabulary(LabeledCorpus{}, config); });
}

TEST_CASE("document frequency matches a brute-force membership count") {
  const auto [corpus, tokens] = random_corpus(20, 42);
  const Vocabulary vocab = build_vocabulary(corpus, TokenizerConfig{});

  const auto df = oracle::dense_document_frequency(tokens, vocab.index_to_token);
  REQUIRE(df.size() == vocab.size());
  for (size_t t = 0; t < df.size(); ++t) {
    CHECK(vocab.document_frequency[t] == df[t]);
    CHECK(vocab.document_frequency[t] >= 1);
    CHECK(vocab.document_frequency[t] <= vocab.n_documents);
  }
}

TEST_CASE("count_vectorize counts in-vocabulary occurrences") {
  LabeledCorpus corpus;
  corpus.label_names = {"x"};
  corpus.documents = {{0, "a b a", 0}};
  const Vocabulary vocab = build_vocabulary(corpus, TokenizerConfig{});

  std::vector<Document> docs{{0, "a b a", 0}, {1, "zzz", 0}};
  const SparseMatrix counts = count_vectorize(docs, vocab, TokenizerConfig{});
  REQUIRE(counts.rows() == 2);
  REQUIRE(counts.cols() == 2);
  CHECK(counts.to_dense() == std::vector<std::vector<double>>{{2.0, 1.0}, {0.0, 0.0}});
  CHECK(counts.row(1).nnz() == 0);
}

TEST_CASE("count_vectorize matches a dense nested-loop count") {
  const auto [corpus, tokens] = random_corpus(20, 7);
  const Vocabulary vocab = build_vocabulary(corpus, TokenizerConfig{});
  const SparseMatrix counts = count_vectorize(corpus.documents, vocab, TokenizerConfig{});

  const auto expected = oracle::dense_counts(tokens, vocab.index_to_token);
  CHECK(counts.to_dense() == expected);

  // Row sums equal the number of in-vocabulary tokens; entries are counts.
  const auto dense = counts.to_dense();
  for (size_t d = 0; d < dense.size(); ++d) {
    double sum = 0.0;
    for (const double v : dense[d]) {
      CHECK(v >= 0.0);
      CHECK(v == std::floor(v));
      sum += v;
    }
    CHECK(sum == static_cast<double>(tokens[d].size()));
  }
}

TEST_CASE("tfidf_transform applies smooth idf and row normalization") {
  LabeledCorpus corpus;
  corpus.label_names = {"x"};
  corpus.documents = {{0, "a b a", 0}};
  const Vocabulary vocab = build_vocabulary(corpus, TokenizerConfig{});
  const SparseMatrix counts = count_vectorize(corpus.documents, vocab, TokenizerConfig{});
  const SparseMatrix weighted = tfidf_transform(counts, vocab);

  // idf = ln(2/2) + 1 = 1, so the row is (2,1)/sqrt(5).
  const auto dense = weighted.to_dense();
  REQUIRE(dense.size() == 1);
  CHECK(dense[0][0] == doctest::Approx(2.0 / std::sqrt(5.0)).epsilon(1e-12));
  CHECK(dense[0][1] == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-12));
  CHECK(dense[0][0] == doctest::Approx(0.89443).epsilon(1e-5));
  CHECK(dense[0][1] == doctest::Approx(0.44721).epsilon(1e-5));
}

TEST_CASE("tfidf_transform passes all-zero rows through") {
  LabeledCorpus corpus;
  corpus.label_names = {"x"};
  corpus.documents = {{0, "a b", 0}};
  const Vocabulary vocab = build_vocabulary(corpus, TokenizerConfig{});

  std::vector<Document> docs{{0, "zzz", 0}};
  const SparseMatrix counts = count_vectorize(docs, vocab, TokenizerConfig{});
  const SparseMatrix weighted = tfidf_transform(counts, vocab);
  CHECK(weighted.row(0).nnz() == 0);
}

TEST_CASE("tfidf pipeline matches the dense oracle") {
  const auto [corpus, tokens] = random_corpus(20, 99);
  const Vocabulary vocab = build_vocabulary(corpus, TokenizerConfig{});
  const SparseMatrix counts = count_vectorize(corpus.documents, vocab, TokenizerConfig{});
  const SparseMatrix weighted = tfidf_transform(counts, vocab);

  const auto expected = oracle::dense_tfidf(
      oracle::dense_counts(tokens, vocab.index_to_token),
      oracle::dense_document_frequency(tokens, vocab.index_to_token), corpus.size());

  const auto dense = weighted.to_dense();
  REQUIRE(dense.size() == expected.size());
  for (size_t d = 0; d < dense.size(); ++d) {
    for (size_t t = 0; t < dense[d].size(); ++t) {
      CHECK(std::fabs(dense[d][t] - expected[d][t]) <= 1e-9);
    }
  }

  // Non-empty rows sit on the unit sphere.
  for (size_t d = 0; d < dense.size(); ++d) {
    double norm = 0.0;
    for (const double v : dense[d]) norm += v * v;
    if (weighted.row(d).nnz() > 0) CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("idf_value tracks the formula when the corpus doubles") {
  for (const auto [n, df] : {std::pair<size_t, size_t>{20, 3}, {100, 41}, {7, 7}}) {
    const double direct = std::log((1.0 + 2.0 * n) / (1.0 + 2.0 * df)) + 1.0;
    CHECK(idf_value(2 * n, 2 * df) == doctest::Approx(direct).epsilon(1e-9));
  }
  expect_error(errc::dimension_mismatch, [&] {
    LabeledCorpus corpus;
    corpus.label_names = {"x"};
    corpus.documents = {{0, "a", 0}};
    const Vocabulary vocab = build_vocabulary(corpus, TokenizerConfig{});
    tfidf_transform(SparseMatrix::from_dense({{1.0, 2.0}}), vocab);
  });
}

TEST_CASE("sparse round-trips through dense form") {
  const std::vector<std::vector<double>> dense{
      {0.0, 1.5, 0.0, -2.0}, {0.0, 0.0, 0.0, 0.0}, {3.0, 0.0, 0.25, 0.0}};
  const SparseMatrix m = SparseMatrix::from_dense(dense);
  CHECK(m.nnz() == 4);
  CHECK(m.to_dense() == dense);
  CHECK(SparseMatrix::from_dense(m.to_dense()) == m);
}

TEST_CASE("sparse from_rows merges duplicates and drops zeros") {
  const SparseMatrix m = SparseMatrix::from_rows(
      3, {{{2, 1.0}, {0, 4.0}, {2, -1.0}}, {{1, 2.5}, {1, 0.5}}});
  CHECK(m.to_dense() == std::vector<std::vector<double>>{{4.0, 0.0, 0.0}, {0.0, 3.0, 0.0}});

  const SparseRow row = m.row(1);
  CHECK(row.value_at(1) == 3.0);
  CHECK(row.value_at(2) == 0.0);
  CHECK(row.dim == 3);
}

TEST_CASE("sparse row algebra agrees with dense arithmetic") {
  const SparseMatrix m =
      SparseMatrix::from_dense({{1.0, 0.0, 2.0, 0.0}, {0.0, 3.0, 4.0, 1.0}});
  CHECK(dot(m.row(0), m.row(1)) == 8.0);
  CHECK(m.row(0).squared_norm() == 5.0);
  CHECK(squared_distance(m.row(0), m.row(1)) == doctest::Approx(1 + 9 + 4 + 1).epsilon(1e-12));

  const SparseMatrix selected = m.select_rows(std::vector<size_t>{1, 0, 1});
  CHECK(selected.rows() == 3);
  CHECK(selected.to_dense()[0] == m.to_dense()[1]);
  CHECK(selected.to_dense()[1] == m.to_dense()[0]);
}

}  // TEST_SUITE
