#include "textclf/artifact.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "textclf/error.hpp"

namespace textclf {

namespace {

constexpr std::string_view kMagic = "textclf-artifact v1";

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(std::string_view text, const std::string& what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(errc::bad_artifact, "bad numeric header field " + what);
  }
  return v;
}

class ByteWriter {
 public:
  void u8(uint8_t v) { out_.push_back(static_cast<char>(v)); }

  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }

  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }

  void i32(int32_t v) { u32(static_cast<uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }

  void str(std::string_view s) {
    u32(static_cast<uint32_t>(s.size()));
    out_.append(s);
  }

  void raw(std::string_view s) { out_.append(s); }

  const std::string& bytes() const { return out_; }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  uint8_t u8() {
    need(1);
    return static_cast<uint8_t>(data_[pos_++]);
  }

  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(data_[pos_++])) << (8 * i);
    return v;
  }

  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(data_[pos_++])) << (8 * i);
    return v;
  }

  int32_t i32() { return static_cast<int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

  std::string str() {
    const uint32_t len = u32();
    need(len);
    std::string s(data_.substr(pos_, len));
    pos_ += len;
    return s;
  }

  std::string_view slice(size_t len) {
    need(len);
    std::string_view s = data_.substr(pos_, len);
    pos_ += len;
    return s;
  }

  bool done() const { return pos_ == data_.size(); }
  size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(size_t n) {
    if (pos_ + n > data_.size()) throw Error(errc::bad_artifact, "truncated artifact payload");
  }

  std::string_view data_;
  size_t pos_ = 0;
};

void write_sparse(ByteWriter& w, const SparseMatrix& m) {
  w.u64(m.rows());
  w.u64(m.cols());
  for (size_t off : m.offsets()) w.u64(off);
  for (uint32_t c : m.col_indices()) w.u32(c);
  for (double v : m.values()) w.f64(v);
}

SparseMatrix read_sparse(ByteReader& r) {
  const size_t rows = r.u64();
  const size_t cols = r.u64();
  std::vector<size_t> offsets(rows + 1);
  for (size_t& off : offsets) off = r.u64();
  if (offsets.front() != 0) throw Error(errc::bad_artifact, "sparse offsets must start at 0");
  for (size_t i = 0; i + 1 < offsets.size(); ++i) {
    if (offsets[i] > offsets[i + 1]) {
      throw Error(errc::bad_artifact, "sparse offsets must be non-decreasing");
    }
  }
  std::vector<uint32_t> col_indices(offsets.back());
  for (uint32_t& c : col_indices) c = r.u32();
  std::vector<double> values(offsets.back());
  for (double& v : values) v = r.f64();
  return SparseMatrix(rows, cols, std::move(offsets), std::move(col_indices), std::move(values));
}

std::string encode_labels(const TrainedModel& model) {
  ByteWriter w;
  w.u32(static_cast<uint32_t>(model.label_names.size()));
  for (const std::string& name : model.label_names) w.str(name);
  return w.bytes();
}

void decode_labels(ByteReader r, TrainedModel& model) {
  const uint32_t n = r.u32();
  model.label_names.clear();
  for (uint32_t i = 0; i < n; ++i) model.label_names.push_back(r.str());
  if (!r.done()) throw Error(errc::bad_artifact, "labels section has trailing bytes");
}

std::string encode_tokenizer(const TrainedModel& model) {
  ByteWriter w;
  w.u8(model.tokenizer.lowercase ? 1 : 0);
  w.u64(model.tokenizer.min_token_len);
  std::vector<std::string> words(model.tokenizer.stopwords.begin(),
                                 model.tokenizer.stopwords.end());
  std::sort(words.begin(), words.end());
  w.u32(static_cast<uint32_t>(words.size()));
  for (const std::string& word : words) w.str(word);
  return w.bytes();
}

void decode_tokenizer(ByteReader r, TrainedModel& model) {
  model.tokenizer.lowercase = r.u8() != 0;
  model.tokenizer.min_token_len = r.u64();
  const uint32_t n = r.u32();
  model.tokenizer.stopwords.clear();
  for (uint32_t i = 0; i < n; ++i) model.tokenizer.stopwords.insert(r.str());
  if (!r.done()) throw Error(errc::bad_artifact, "tokenizer section has trailing bytes");
}

std::string encode_features(const TrainedModel& model) {
  ByteWriter w;
  w.u8(model.use_tfidf ? 1 : 0);
  w.u64(model.numeric_features);
  return w.bytes();
}

void decode_features(ByteReader r, TrainedModel& model) {
  model.use_tfidf = r.u8() != 0;
  model.numeric_features = r.u64();
  if (!r.done()) throw Error(errc::bad_artifact, "features section has trailing bytes");
}

std::string encode_vocab(const Vocabulary& vocab) {
  ByteWriter w;
  w.u64(vocab.n_documents);
  w.u32(static_cast<uint32_t>(vocab.size()));
  for (size_t i = 0; i < vocab.size(); ++i) {
    w.str(vocab.index_to_token[i]);
    w.u32(vocab.document_frequency[i]);
  }
  return w.bytes();
}

void decode_vocab(ByteReader r, TrainedModel& model) {
  Vocabulary vocab;
  vocab.n_documents = r.u64();
  const uint32_t n = r.u32();
  for (uint32_t i = 0; i < n; ++i) {
    std::string token = r.str();
    vocab.document_frequency.push_back(r.u32());
    vocab.token_to_index.emplace(token, i);
    vocab.index_to_token.push_back(std::move(token));
  }
  if (!r.done()) throw Error(errc::bad_artifact, "vocab section has trailing bytes");
  model.vocab = std::move(vocab);
}

std::string encode_lexicon(const TrainedModel& model) {
  ByteWriter w;
  w.f64(model.lexicon_threshold);
  w.f64(model.lexicon.default_polarity);
  std::map<std::string, double> sorted(model.lexicon.polarity.begin(),
                                       model.lexicon.polarity.end());
  w.u32(static_cast<uint32_t>(sorted.size()));
  for (const auto& [token, polarity] : sorted) {
    w.str(token);
    w.f64(polarity);
  }
  return w.bytes();
}

void decode_lexicon(ByteReader r, TrainedModel& model) {
  model.lexicon_threshold = r.f64();
  model.lexicon.default_polarity = r.f64();
  const uint32_t n = r.u32();
  model.lexicon.polarity.clear();
  for (uint32_t i = 0; i < n; ++i) {
    std::string token = r.str();
    model.lexicon.polarity[std::move(token)] = r.f64();
  }
  if (!r.done()) throw Error(errc::bad_artifact, "lexicon section has trailing bytes");
}

std::string encode_svm(const SvmModel& svm) {
  ByteWriter w;
  w.u8(svm.kernel == Kernel::rbf ? 0 : 1);
  w.f64(svm.gamma_value);
  w.u64(svm.n_features);
  w.u32(svm.n_classes);
  w.u32(static_cast<uint32_t>(svm.binary.size()));
  for (const BinarySvm& machine : svm.binary) {
    w.f64(machine.bias);
    w.u8(machine.converged ? 1 : 0);
    w.u32(static_cast<uint32_t>(machine.dual_coefficients.size()));
    for (double a : machine.dual_coefficients) w.f64(a);
    write_sparse(w, machine.support_vectors);
  }
  return w.bytes();
}

void decode_svm(ByteReader r, TrainedModel& model) {
  SvmModel svm;
  const uint8_t kernel = r.u8();
  if (kernel > 1) throw Error(errc::bad_artifact, "unknown svm kernel tag");
  svm.kernel = kernel == 0 ? Kernel::rbf : Kernel::linear;
  svm.gamma_value = r.f64();
  svm.n_features = r.u64();
  svm.n_classes = r.u32();
  const uint32_t n = r.u32();
  for (uint32_t i = 0; i < n; ++i) {
    BinarySvm machine;
    machine.bias = r.f64();
    machine.converged = r.u8() != 0;
    const uint32_t n_sv = r.u32();
    for (uint32_t s = 0; s < n_sv; ++s) machine.dual_coefficients.push_back(r.f64());
    machine.support_vectors = read_sparse(r);
    if (machine.support_vectors.rows() != n_sv) {
      throw Error(errc::bad_artifact, "svm coefficient/support vector count mismatch");
    }
    svm.binary.push_back(std::move(machine));
  }
  if (!r.done()) throw Error(errc::bad_artifact, "svm section has trailing bytes");
  model.svm = std::move(svm);
}

std::string encode_gbdt(const GbdtEnsemble& gbdt) {
  ByteWriter w;
  w.f64(gbdt.base_score);
  w.f64(gbdt.learning_rate);
  w.u64(gbdt.n_features);
  w.u32(static_cast<uint32_t>(gbdt.trees.size()));
  for (const Tree& tree : gbdt.trees) {
    w.u32(static_cast<uint32_t>(tree.nodes.size()));
    for (const TreeNode& node : tree.nodes) {
      w.i32(node.left);
      w.i32(node.right);
      w.u32(node.feature);
      w.f64(node.threshold);
      w.f64(node.weight);
    }
  }
  return w.bytes();
}

void decode_gbdt(ByteReader r, TrainedModel& model) {
  GbdtEnsemble gbdt;
  gbdt.base_score = r.f64();
  gbdt.learning_rate = r.f64();
  gbdt.n_features = r.u64();
  const uint32_t n_trees = r.u32();
  for (uint32_t t = 0; t < n_trees; ++t) {
    Tree tree;
    const uint32_t n_nodes = r.u32();
    for (uint32_t i = 0; i < n_nodes; ++i) {
      TreeNode node;
      node.left = r.i32();
      node.right = r.i32();
      node.feature = r.u32();
      node.threshold = r.f64();
      node.weight = r.f64();
      tree.nodes.push_back(node);
    }
    gbdt.trees.push_back(std::move(tree));
  }
  if (!r.done()) throw Error(errc::bad_artifact, "gbdt section has trailing bytes");
  model.gbdt = std::move(gbdt);
}

std::string encode_transformer(const TrainedModel& model) {
  const TransformerModel& tf = *model.transformer;
  ByteWriter w;
  w.u64(tf.config.vocab_size);
  w.u64(tf.config.max_positions);
  w.u64(tf.config.n_layers);
  w.u64(tf.config.hidden_size);
  w.u64(tf.config.n_heads);
  w.u64(tf.config.ffn_size);
  w.u32(tf.config.n_classes);
  w.f64(tf.config.mask_rate);
  w.u64(tf.config.seed);
  w.u64(model.seq_len);
  w.u32(static_cast<uint32_t>(tf.vocab.tokens.size()));
  for (const std::string& token : tf.vocab.tokens) w.str(token);
  tf.params.for_each([&](const Mat& m, size_t) {
    w.u64(static_cast<uint64_t>(m.rows()));
    w.u64(static_cast<uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) w.f64(m(i, j));
    }
  });
  return w.bytes();
}

void decode_transformer(ByteReader r, TrainedModel& model) {
  TransformerConfig config;
  config.vocab_size = r.u64();
  config.max_positions = r.u64();
  config.n_layers = r.u64();
  config.hidden_size = r.u64();
  config.n_heads = r.u64();
  config.ffn_size = r.u64();
  config.n_classes = r.u32();
  config.mask_rate = r.f64();
  config.seed = r.u64();
  model.seq_len = r.u64();

  WordPieceVocab vocab;
  const uint32_t n_tokens = r.u32();
  for (uint32_t i = 0; i < n_tokens; ++i) {
    std::string token = r.str();
    vocab.token_to_id.emplace(token, i);
    vocab.tokens.push_back(std::move(token));
  }

  TransformerModel tf = init_transformer(config, std::move(vocab));
  tf.params.for_each([&](Mat& m, size_t) {
    const uint64_t rows = r.u64();
    const uint64_t cols = r.u64();
    if (rows != static_cast<uint64_t>(m.rows()) || cols != static_cast<uint64_t>(m.cols())) {
      throw Error(errc::bad_artifact, "transformer weight shape does not match its config");
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = r.f64();
    }
  });
  if (!r.done()) throw Error(errc::bad_artifact, "transformer section has trailing bytes");
  model.transformer = std::move(tf);
}

bool known_family(const std::string& family) {
  return family == "lexicon" || family == "svm" || family == "gbdt" || family == "transformer";
}

}  // namespace

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  if (!known_family(model.family)) {
    throw Error(errc::config_invalid, "unknown model family " + model.family);
  }
  std::ostringstream header;
  header << kMagic << '\n';
  header << "family=" << model.family << '\n';
  header << "train_acc=" << fmt_double(model.train_acc) << '\n';
  header << "val_acc=" << fmt_double(model.val_acc) << '\n';
  for (const auto& [key, value] : model.config_snapshot) {
    if (key.find('\n') != std::string::npos || value.find('\n') != std::string::npos ||
        key.find('=') != std::string::npos) {
      throw Error(errc::config_invalid, "config snapshot entries must be single-line");
    }
    header << "config." << key << '=' << value << '\n';
  }
  header << '\n';

  ByteWriter body;
  auto section = [&body](std::string_view name, const std::string& payload) {
    body.str(name);
    body.u64(payload.size());
    body.raw(payload);
  };
  section("labels", encode_labels(model));
  if (model.family != "transformer") section("tokenizer", encode_tokenizer(model));
  if (model.family == "svm" || model.family == "gbdt") section("features", encode_features(model));
  if (model.vocab) section("vocab", encode_vocab(*model.vocab));
  if (model.family == "lexicon") section("lexicon", encode_lexicon(model));
  if (model.svm) section("svm", encode_svm(*model.svm));
  if (model.gbdt) section("gbdt", encode_gbdt(*model.gbdt));
  if (model.transformer) section("transformer", encode_transformer(model));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(errc::missing_file, "cannot write " + path.string());
  out << header.str() << body.bytes();
  if (!out) throw Error(errc::bad_artifact, "write failed for " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::missing_file, path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string data = buffer.str();

  const size_t first_newline = data.find('\n');
  if (data.substr(0, first_newline) != kMagic) {
    throw Error(errc::version_mismatch, "unrecognized artifact header in " + path.string());
  }
  const size_t header_end = data.find("\n\n");
  if (header_end == std::string::npos) {
    throw Error(errc::bad_artifact, "artifact header never terminates");
  }

  TrainedModel model;
  bool saw_family = false;
  size_t pos = first_newline + 1;
  while (pos < header_end + 1) {
    const size_t eol = data.find('\n', pos);
    std::string_view line(data.data() + pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) break;
    const size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(errc::bad_artifact, "malformed artifact header line");
    }
    const std::string_view key = line.substr(0, eq);
    const std::string_view value = line.substr(eq + 1);
    if (key == "family") {
      model.family = std::string(value);
      saw_family = true;
    } else if (key == "train_acc") {
      model.train_acc = parse_double(value, "train_acc");
    } else if (key == "val_acc") {
      model.val_acc = parse_double(value, "val_acc");
    } else if (key.starts_with("config.")) {
      model.config_snapshot[std::string(key.substr(7))] = std::string(value);
    } else {
      throw Error(errc::bad_artifact, "unknown artifact header key " + std::string(key));
    }
  }
  if (!saw_family || !known_family(model.family)) {
    throw Error(errc::bad_artifact, "artifact does not name a known model family");
  }

  ByteReader sections(std::string_view(data).substr(header_end + 2));
  bool saw_payload = false;
  while (!sections.done()) {
    const std::string name = sections.str();
    const uint64_t len = sections.u64();
    if (len > sections.remaining()) throw Error(errc::bad_artifact, "truncated artifact section");
    ByteReader payload(sections.slice(len));
    if (name == "labels") {
      decode_labels(payload, model);
    } else if (name == "tokenizer") {
      decode_tokenizer(payload, model);
    } else if (name == "features") {
      decode_features(payload, model);
    } else if (name == "vocab") {
      decode_vocab(payload, model);
    } else if (name == "lexicon") {
      decode_lexicon(payload, model);
    } else if (name == "svm") {
      decode_svm(payload, model);
      saw_payload = true;
    } else if (name == "gbdt") {
      decode_gbdt(payload, model);
      saw_payload = true;
    } else if (name == "transformer") {
      decode_transformer(payload, model);
      saw_payload = true;
    } else {
      throw Error(errc::bad_artifact, "unknown artifact section " + name);
    }
  }

  if (model.family == "lexicon") saw_payload = !model.lexicon.polarity.empty();
  const bool family_matches = (model.family == "svm" && model.svm) ||
                              (model.family == "gbdt" && model.gbdt) ||
                              (model.family == "transformer" && model.transformer) ||
                              (model.family == "lexicon" && saw_payload);
  if (!family_matches) {
    throw Error(errc::bad_artifact, "artifact is missing its " + model.family + " payload");
  }
  if (model.label_names.empty()) {
    throw Error(errc::bad_artifact, "artifact is missing its labels section");
  }
  return model;
}

}  // namespace textclf
