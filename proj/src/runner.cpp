#include "textclf/runner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

#include "textclf/error.hpp"
#include "textclf/features.hpp"
#include "textclf/fixtures.hpp"
#include "textclf/lexicon.hpp"
#include "textclf/schedule.hpp"
#include "textclf/transformer.hpp"

namespace textclf {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_config_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error(errc::config_invalid, key + " wants a number, got `" + value + "`");
  }
  return v;
}

uint64_t parse_config_uint(const std::string& key, const std::string& value) {
  uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error(errc::config_invalid, key + " wants a non-negative integer, got `" + value + "`");
  }
  return v;
}

bool parse_config_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw Error(errc::config_invalid, key + " wants true or false, got `" + value + "`");
}

std::string bool_name(bool v) { return v ? "true" : "false"; }

std::vector<std::string> read_text_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::missing_file, path.string());
  std::vector<std::string> lines;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    first = false;
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

bool is_numeric_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::missing_file, path.string());
  std::string line;
  std::getline(in, line);
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  return line.starts_with("f0,");
}

}  // namespace

void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value) {
  if (key == "model") {
    if (value != "lexicon" && value != "svm" && value != "gbdt" && value != "transformer") {
      throw Error(errc::config_invalid, "model must be lexicon, svm, gbdt or transformer");
    }
    config.model = value;
  } else if (key == "features") {
    if (value != "count" && value != "tfidf") {
      throw Error(errc::config_invalid, "features must be count or tfidf");
    }
    config.features = value;
  } else if (key == "stopword_filter") {
    if (value != "auto" && value != "on" && value != "off") {
      throw Error(errc::config_invalid, "stopword_filter must be auto, on or off");
    }
    config.stopword_filter = value;
  } else if (key == "stopwords") {
    config.stopword_path = value;
  } else if (key == "lexicon") {
    config.lexicon_path = value;
  } else if (key == "lexicon.threshold") {
    config.lexicon_threshold = parse_config_double(key, value);
  } else if (key == "train_fraction") {
    config.split.train_fraction = parse_config_double(key, value);
  } else if (key == "stratified") {
    config.split.stratified = parse_config_bool(key, value);
  } else if (key == "seed") {
    config.seed = parse_config_uint(key, value);
  } else if (key == "out_dir") {
    config.out_dir = value;
  } else if (key == "svm.c") {
    config.svm.c = parse_config_double(key, value);
  } else if (key == "svm.kernel") {
    if (value == "rbf") {
      config.svm.kernel = Kernel::rbf;
    } else if (value == "linear") {
      config.svm.kernel = Kernel::linear;
    } else {
      throw Error(errc::config_invalid, "svm.kernel must be rbf or linear");
    }
  } else if (key == "svm.gamma") {
    if (value == "scale") {
      config.svm.gamma.reset();
    } else {
      config.svm.gamma = parse_config_double(key, value);
    }
  } else if (key == "svm.tolerance") {
    config.svm.tolerance = parse_config_double(key, value);
  } else if (key == "svm.max_passes") {
    config.svm.max_passes = parse_config_uint(key, value);
  } else if (key == "svm.cache_mb") {
    config.svm.cache_mb = parse_config_uint(key, value);
  } else if (key == "gbdt.rounds") {
    config.gbdt.n_rounds = parse_config_uint(key, value);
  } else if (key == "gbdt.learning_rate") {
    config.gbdt.learning_rate = parse_config_double(key, value);
  } else if (key == "gbdt.max_depth") {
    config.gbdt.max_depth = parse_config_uint(key, value);
  } else if (key == "gbdt.min_child_weight") {
    config.gbdt.min_child_weight = parse_config_double(key, value);
  } else if (key == "gbdt.gamma") {
    config.gbdt.gamma = parse_config_double(key, value);
  } else if (key == "gbdt.subsample") {
    config.gbdt.subsample = parse_config_double(key, value);
  } else if (key == "gbdt.colsample") {
    config.gbdt.colsample_bytree = parse_config_double(key, value);
  } else if (key == "gbdt.lambda") {
    config.gbdt.lambda = parse_config_double(key, value);
  } else if (key == "tf.layers") {
    config.tf_layers = parse_config_uint(key, value);
  } else if (key == "tf.hidden") {
    config.tf_hidden = parse_config_uint(key, value);
  } else if (key == "tf.heads") {
    config.tf_heads = parse_config_uint(key, value);
  } else if (key == "tf.ffn") {
    config.tf_ffn = parse_config_uint(key, value);
  } else if (key == "tf.vocab_size") {
    config.tf_vocab_size = parse_config_uint(key, value);
  } else if (key == "tf.max_positions") {
    config.tf_max_positions = parse_config_uint(key, value);
  } else if (key == "tf.seq_len") {
    config.tf_seq_len = parse_config_uint(key, value);
  } else if (key == "tf.batch_size") {
    config.tf_batch_size = parse_config_uint(key, value);
  } else if (key == "tf.peak_lr") {
    config.tf_peak_lr = parse_config_double(key, value);
  } else if (key == "tf.cut_frac") {
    config.tf_cut_frac = parse_config_double(key, value);
  } else if (key == "tf.ratio") {
    config.tf_ratio = parse_config_double(key, value);
  } else if (key == "tf.decay_factor") {
    config.tf_decay_factor = parse_config_double(key, value);
  } else if (key == "tf.epochs_per_stage") {
    config.tf_epochs_per_stage = parse_config_uint(key, value);
  } else if (key == "tf.mask_rate") {
    config.tf_mask_rate = parse_config_double(key, value);
  } else if (key == "tf.n_classes") {
    config.tf_n_classes = static_cast<uint32_t>(parse_config_uint(key, value));
  } else if (key == "tf.init") {
    config.tf_init = value;
  } else if (key == "pretrain.steps") {
    config.pretrain_steps = parse_config_uint(key, value);
  } else if (key == "pretrain.batch_size") {
    config.pretrain_batch_size = parse_config_uint(key, value);
  } else if (key == "pretrain.max_len") {
    config.pretrain_max_len = parse_config_uint(key, value);
  } else {
    throw Error(errc::config_invalid, "unknown config key `" + key + "`");
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::missing_file, path.string());
  RunConfig config;
  std::string line;
  size_t line_no = 0;
  auto trim = [](std::string s) {
    const size_t begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return std::string();
    const size_t end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw Error(errc::config_invalid,
                  path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    apply_config_entry(config, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
  return config;
}

std::map<std::string, std::string> config_snapshot(const RunConfig& config) {
  std::map<std::string, std::string> snap;
  snap["model"] = config.model;
  snap["features"] = config.features;
  snap["stopword_filter"] = config.stopword_filter;
  snap["stopwords"] = config.stopword_path.string();
  snap["lexicon"] = config.lexicon_path.string();
  snap["lexicon.threshold"] = fmt_double(config.lexicon_threshold);
  snap["train_fraction"] = fmt_double(config.split.train_fraction);
  snap["stratified"] = bool_name(config.split.stratified);
  snap["seed"] = std::to_string(config.seed);
  snap["svm.c"] = fmt_double(config.svm.c);
  snap["svm.kernel"] = config.svm.kernel == Kernel::rbf ? "rbf" : "linear";
  snap["svm.gamma"] = config.svm.gamma ? fmt_double(*config.svm.gamma) : "scale";
  snap["svm.tolerance"] = fmt_double(config.svm.tolerance);
  snap["svm.max_passes"] = std::to_string(config.svm.max_passes);
  snap["svm.cache_mb"] = std::to_string(config.svm.cache_mb);
  snap["gbdt.rounds"] = std::to_string(config.gbdt.n_rounds);
  snap["gbdt.learning_rate"] = fmt_double(config.gbdt.learning_rate);
  snap["gbdt.max_depth"] = std::to_string(config.gbdt.max_depth);
  snap["gbdt.min_child_weight"] = fmt_double(config.gbdt.min_child_weight);
  snap["gbdt.gamma"] = fmt_double(config.gbdt.gamma);
  snap["gbdt.subsample"] = fmt_double(config.gbdt.subsample);
  snap["gbdt.colsample"] = fmt_double(config.gbdt.colsample_bytree);
  snap["gbdt.lambda"] = fmt_double(config.gbdt.lambda);
  snap["tf.layers"] = std::to_string(config.tf_layers);
  snap["tf.hidden"] = std::to_string(config.tf_hidden);
  snap["tf.heads"] = std::to_string(config.tf_heads);
  snap["tf.ffn"] = std::to_string(config.tf_ffn);
  snap["tf.vocab_size"] = std::to_string(config.tf_vocab_size);
  snap["tf.max_positions"] = std::to_string(config.tf_max_positions);
  snap["tf.seq_len"] = std::to_string(config.tf_seq_len);
  snap["tf.batch_size"] = std::to_string(config.tf_batch_size);
  snap["tf.peak_lr"] = fmt_double(config.tf_peak_lr);
  snap["tf.cut_frac"] = fmt_double(config.tf_cut_frac);
  snap["tf.ratio"] = fmt_double(config.tf_ratio);
  snap["tf.decay_factor"] = fmt_double(config.tf_decay_factor);
  snap["tf.epochs_per_stage"] = std::to_string(config.tf_epochs_per_stage);
  snap["tf.mask_rate"] = fmt_double(config.tf_mask_rate);
  snap["tf.n_classes"] = std::to_string(config.tf_n_classes);
  snap["tf.init"] = config.tf_init.string();
  snap["pretrain.steps"] = std::to_string(config.pretrain_steps);
  snap["pretrain.batch_size"] = std::to_string(config.pretrain_batch_size);
  snap["pretrain.max_len"] = std::to_string(config.pretrain_max_len);
  return snap;
}

namespace {

TokenizerConfig make_tokenizer(const RunConfig& config) {
  TokenizerConfig tok;
  const bool classical = config.model == "svm" || config.model == "gbdt";
  const bool remove = config.stopword_filter == "on" ||
                      (config.stopword_filter == "auto" && classical);
  if (remove) {
    if (!config.stopword_path.empty()) {
      tok.stopwords = load_stopwords(config.stopword_path);
    } else {
      for (const std::string& word : demo_stopwords()) tok.stopwords.insert(word);
    }
  }
  return tok;
}

// Documents -> feature rows in the model's training feature space.
SparseMatrix featurize(const TrainedModel& model, std::span<const Document> docs) {
  if (model.numeric_features > 0) {
    std::vector<std::vector<double>> dense;
    dense.reserve(docs.size());
    for (const Document& doc : docs) {
      dense.push_back(parse_numeric_row(doc.text, model.numeric_features));
    }
    SparseMatrix x = SparseMatrix::from_dense(dense);
    return docs.empty() ? SparseMatrix(0, model.numeric_features, {0}, {}, {}) : x;
  }
  if (!model.vocab) throw Error(errc::bad_artifact, "model carries no vocabulary");
  const SparseMatrix counts = count_vectorize(docs, *model.vocab, model.tokenizer);
  return model.use_tfidf ? tfidf_transform(counts, *model.vocab) : counts;
}

std::vector<uint32_t> labels_of(const LabeledCorpus& corpus) {
  std::vector<uint32_t> y;
  y.reserve(corpus.documents.size());
  for (const Document& doc : corpus.documents) y.push_back(*doc.label);
  return y;
}

double safe_accuracy(const TrainedModel& model, const LabeledCorpus& corpus) {
  if (corpus.documents.empty()) return 0.0;
  return accuracy(predict_labels(model, corpus.documents), labels_of(corpus));
}

void print_metrics(std::ostream& out, double train_acc, double val_acc) {
  out << "train_acc=" << fmt_double(train_acc) << " val_acc=" << fmt_double(val_acc) << '\n';
}

TransformerModel make_finetuned(const RunConfig& config, const LabeledCorpus& train,
                                size_t n_classes, size_t seq_len) {
  TransformerModel model;
  if (!config.tf_init.empty()) {
    TrainedModel base = load_model(config.tf_init);
    if (!base.transformer) {
      throw Error(errc::bad_artifact, "tf.init artifact is not a transformer");
    }
    model = std::move(*base.transformer);
    if (model.config.n_classes != n_classes) {
      throw Error(errc::config_invalid, "tf.init classifier head expects " +
                                            std::to_string(model.config.n_classes) +
                                            " classes, data has " + std::to_string(n_classes));
    }
  } else {
    std::vector<std::string> texts;
    texts.reserve(train.documents.size());
    for (const Document& doc : train.documents) texts.push_back(doc.text);
    WordPieceVocab vocab = train_wordpiece(texts, config.tf_vocab_size);
    TransformerConfig tc;
    tc.vocab_size = vocab.size();
    tc.max_positions = config.tf_max_positions;
    tc.n_layers = config.tf_layers;
    tc.hidden_size = config.tf_hidden;
    tc.n_heads = config.tf_heads;
    tc.ffn_size = config.tf_ffn;
    tc.n_classes = static_cast<uint32_t>(n_classes);
    tc.mask_rate = config.tf_mask_rate;
    tc.seed = config.seed;
    model = init_transformer(tc, std::move(vocab));
  }

  FinetunePlan plan;
  plan.batch_size = config.tf_batch_size;
  plan.unfreeze.n_groups = model.n_groups() - 1;
  plan.unfreeze.epochs_per_stage = config.tf_epochs_per_stage;
  plan.discriminative.last_layer_lr = config.tf_peak_lr;
  plan.discriminative.n_groups = model.n_groups();
  plan.discriminative.decay_factor = config.tf_decay_factor;
  plan.stlr.peak_lr = config.tf_peak_lr;
  plan.stlr.cut_frac = config.tf_cut_frac;
  plan.stlr.ratio = config.tf_ratio;
  plan.stlr.total_steps = finetune_total_steps(plan, train.documents.size());
  return finetune(std::move(model), train, plan, nullptr, seq_len);
}

std::filesystem::path resolve_out(const RunConfig& config, const std::filesystem::path& out_path,
                                  const std::string& stem) {
  if (!out_path.empty()) {
    if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
    return out_path;
  }
  std::filesystem::create_directories(config.out_dir);
  return config.out_dir / (stem + ".tclf");
}

}  // namespace

std::vector<uint32_t> predict_labels(const TrainedModel& model,
                                     const std::vector<Document>& docs) {
  std::vector<uint32_t> predicted;
  predicted.reserve(docs.size());
  if (model.family == "lexicon") {
    for (const Document& doc : docs) {
      predicted.push_back(lexicon_classify(doc, model.lexicon, model.lexicon_threshold,
                                           model.tokenizer));
    }
    return predicted;
  }
  if (model.family == "svm") {
    if (!model.svm) throw Error(errc::bad_artifact, "artifact is missing its svm payload");
    return svm_predict(*model.svm, featurize(model, docs));
  }
  if (model.family == "gbdt") {
    if (!model.gbdt) throw Error(errc::bad_artifact, "artifact is missing its gbdt payload");
    return gbdt_predict(*model.gbdt, featurize(model, docs));
  }
  if (!model.transformer) {
    throw Error(errc::bad_artifact, "artifact is missing its transformer payload");
  }
  const TransformerModel& tf = *model.transformer;
  const size_t chunk = 16;
  for (size_t begin = 0; begin < docs.size(); begin += chunk) {
    const size_t end = std::min(begin + chunk, docs.size());
    std::vector<std::string> texts;
    texts.reserve(end - begin);
    for (size_t i = begin; i < end; ++i) texts.push_back(docs[i].text);
    const BatchEncoding batch = encode_min_batch(texts, tf.vocab, model.seq_len);
    for (uint32_t label : transformer_predict(tf, batch)) predicted.push_back(label);
  }
  return predicted;
}

TrainOutcome cmd_train(const RunConfig& config, const std::filesystem::path& data_path,
                       std::ostream& out, const std::filesystem::path& out_path) {
  const bool numeric = is_numeric_csv(data_path);
  LabeledCorpus corpus = numeric ? load_numeric_corpus(data_path) : load_corpus(data_path);
  if (!corpus.fully_labeled()) {
    throw Error(errc::unlabeled_document, "training data must label every row");
  }

  SplitSpec spec = config.split;
  spec.seed = config.seed;
  auto [train, val] = split(corpus, spec);

  TrainedModel tm;
  tm.family = config.model;
  tm.label_names = corpus.label_names;
  tm.config_snapshot = config_snapshot(config);
  tm.tokenizer = make_tokenizer(config);
  tm.use_tfidf = config.features == "tfidf";

  if (config.model == "lexicon") {
    if (numeric) throw Error(errc::config_invalid, "the lexicon family needs text data");
    if (config.lexicon_path.empty()) {
      throw Error(errc::config_invalid, "the lexicon family needs lexicon=<path>");
    }
    if (corpus.label_names.size() != 2) {
      throw Error(errc::config_invalid, "the lexicon family is binary");
    }
    tm.lexicon = load_lexicon(config.lexicon_path);
    tm.lexicon_threshold = config.lexicon_threshold;
  } else if (config.model == "svm" || config.model == "gbdt") {
    SparseMatrix x_train;
    if (numeric) {
      const NumericDataset data = corpus_to_numeric(train);
      tm.numeric_features = data.x.cols();
      x_train = data.x;
    } else {
      tm.vocab = build_vocabulary(train, tm.tokenizer);
      const SparseMatrix counts = count_vectorize(train.documents, *tm.vocab, tm.tokenizer);
      x_train = tm.use_tfidf ? tfidf_transform(counts, *tm.vocab) : counts;
    }
    if (config.model == "svm") {
      tm.svm = train_svm(x_train, labels_of(train), config.svm);
    } else {
      GbdtParams params = config.gbdt;
      params.seed = config.seed;
      tm.gbdt = train_gbdt(x_train, labels_of(train), params);
    }
  } else {
    if (numeric) throw Error(errc::config_invalid, "the transformer family needs text data");
    const size_t seq_len = std::min(config.tf_seq_len, config.tf_max_positions);
    tm.seq_len = seq_len;
    tm.transformer = make_finetuned(config, train, corpus.label_names.size(), seq_len);
    tm.seq_len = std::min(seq_len, tm.transformer->config.max_positions);
  }

  TrainOutcome outcome;
  outcome.train_acc = safe_accuracy(tm, train);
  outcome.val_acc = safe_accuracy(tm, val);
  tm.train_acc = outcome.train_acc;
  tm.val_acc = outcome.val_acc;
  outcome.artifact_path = resolve_out(config, out_path, config.model);
  save_model(tm, outcome.artifact_path);
  print_metrics(out, outcome.train_acc, outcome.val_acc);
  return outcome;
}

namespace {

// Maps data-side label codes into the model's label space by name; names the
// model never saw count as wrong via an out-of-range sentinel.
std::vector<uint32_t> remap_labels(const TrainedModel& model, const LabeledCorpus& corpus) {
  std::vector<uint32_t> mapping(corpus.label_names.size());
  for (size_t i = 0; i < corpus.label_names.size(); ++i) {
    const auto it = std::find(model.label_names.begin(), model.label_names.end(),
                              corpus.label_names[i]);
    mapping[i] = it == model.label_names.end()
                     ? std::numeric_limits<uint32_t>::max()
                     : static_cast<uint32_t>(it - model.label_names.begin());
  }
  std::vector<uint32_t> actual;
  actual.reserve(corpus.documents.size());
  for (const Document& doc : corpus.documents) actual.push_back(mapping[*doc.label]);
  return actual;
}

double eval_on(const TrainedModel& model, const std::filesystem::path& data_path) {
  LabeledCorpus corpus = model.numeric_features > 0 ? load_numeric_corpus(data_path)
                                                    : load_corpus(data_path);
  if (!corpus.fully_labeled()) {
    throw Error(errc::unlabeled_document, "evaluation data must label every row");
  }
  return accuracy(predict_labels(model, corpus.documents), remap_labels(model, corpus));
}

}  // namespace

double cmd_eval(const std::filesystem::path& artifact_path,
                const std::filesystem::path& data_path, std::ostream& out) {
  const TrainedModel model = load_model(artifact_path);
  const double acc = eval_on(model, data_path);
  out << "accuracy=" << fmt_double(acc) << '\n';
  return acc;
}

void cmd_predict(const std::filesystem::path& artifact_path,
                 const std::vector<std::string>& texts, std::ostream& out) {
  const TrainedModel model = load_model(artifact_path);
  for (size_t i = 0; i < texts.size(); ++i) {
    const Document doc{i, texts[i], std::nullopt};
    if (model.family == "gbdt") {
      if (!model.gbdt) throw Error(errc::bad_artifact, "artifact is missing its gbdt payload");
      const SparseMatrix x = featurize(model, std::span<const Document>(&doc, 1));
      const double margin = predict_margin(*model.gbdt, x.row(0));
      const double p1 = 1.0 / (1.0 + std::exp(-margin));
      const uint32_t label = p1 >= 0.5 ? 1 : 0;
      out << "label=" << model.label_names.at(label)
          << " p=" << fmt_double(label == 1 ? p1 : 1.0 - p1) << '\n';
    } else if (model.family == "transformer") {
      if (!model.transformer) {
        throw Error(errc::bad_artifact, "artifact is missing its transformer payload");
      }
      const TransformerModel& tf = *model.transformer;
      const BatchEncoding batch = encode_min_batch({doc.text}, tf.vocab, model.seq_len);
      const ForwardResult result = forward(tf, batch);
      Eigen::Index best = 0;
      result.class_probs.row(0).maxCoeff(&best);
      out << "label=" << model.label_names.at(static_cast<size_t>(best)) << " probs=";
      for (Eigen::Index c = 0; c < result.class_probs.cols(); ++c) {
        if (c) out << ',';
        out << fmt_double(result.class_probs(0, c));
      }
      out << '\n';
    } else {
      const std::vector<uint32_t> label = predict_labels(model, {doc});
      out << "label=" << model.label_names.at(label.at(0)) << '\n';
    }
  }
}

TrainOutcome cmd_pretrain(const RunConfig& config, const std::filesystem::path& sentences_path,
                          std::ostream& out, const std::filesystem::path& out_path) {
  const std::vector<std::string> sentences = read_text_lines(sentences_path);
  if (sentences.empty()) throw Error(errc::empty_corpus, sentences_path.string());

  WordPieceVocab vocab = train_wordpiece(sentences, config.tf_vocab_size);
  TransformerConfig tc;
  tc.vocab_size = vocab.size();
  tc.max_positions = config.tf_max_positions;
  tc.n_layers = config.tf_layers;
  tc.hidden_size = config.tf_hidden;
  tc.n_heads = config.tf_heads;
  tc.ffn_size = config.tf_ffn;
  tc.n_classes = config.tf_n_classes;
  tc.mask_rate = config.tf_mask_rate;
  tc.seed = config.seed;
  TransformerModel model = init_transformer(tc, std::move(vocab));

  PretrainConfig pc;
  pc.steps = config.pretrain_steps;
  pc.batch_size = config.pretrain_batch_size;
  pc.max_len = std::min(config.pretrain_max_len, config.tf_max_positions);
  pc.mask_rate = config.tf_mask_rate;
  pc.schedule.peak_lr = config.tf_peak_lr;
  pc.schedule.cut_frac = config.tf_cut_frac;
  pc.schedule.ratio = config.tf_ratio;
  pc.schedule.total_steps = config.pretrain_steps;
  pc.seed = config.seed;

  PretrainLog log;
  model = pretrain(std::move(model), sentences, pc, &log);
  out << "initial_loss=" << fmt_double(log.initial_joint_loss)
      << " final_loss=" << fmt_double(log.final_joint_loss) << '\n';

  TrainedModel tm;
  tm.family = "transformer";
  for (uint32_t c = 0; c < config.tf_n_classes; ++c) tm.label_names.push_back(std::to_string(c));
  tm.config_snapshot = config_snapshot(config);
  tm.seq_len = std::min(config.tf_seq_len, config.tf_max_positions);
  tm.transformer = std::move(model);

  TrainOutcome outcome;
  outcome.artifact_path = resolve_out(config, out_path, "pretrained");
  save_model(tm, outcome.artifact_path);
  return outcome;
}

void cmd_report(const std::vector<std::filesystem::path>& artifact_paths,
                const std::filesystem::path& data_path, std::ostream& out) {
  if (artifact_paths.empty()) throw Error(errc::empty_input, "report needs at least one model");
  struct Row {
    std::string name;
    double acc;
  };
  std::vector<Row> rows;
  for (const std::filesystem::path& path : artifact_paths) {
    const TrainedModel model = load_model(path);
    const double acc = data_path.empty() ? model.val_acc : eval_on(model, data_path);
    rows.push_back({path.stem().string(), acc});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.acc != b.acc) return a.acc < b.acc;
    return a.name < b.name;
  });

  size_t width = std::string("Model").size();
  for (const Row& row : rows) width = std::max(width, row.name.size());
  auto pct = [](double acc) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", acc * 100.0);
    return std::string(buf);
  };
  out << "Model" << std::string(width - 5, ' ') << "  Validation Accuracy (%)\n";
  for (const Row& row : rows) {
    out << row.name << std::string(width - row.name.size(), ' ') << "  " << pct(row.acc) << '\n';
  }
}

void cmd_schedule_dump(const RunConfig& config, size_t n_docs, std::ostream& out) {
  FinetunePlan plan;
  plan.batch_size = config.tf_batch_size;
  plan.unfreeze.n_groups = config.tf_layers + 1;
  plan.unfreeze.epochs_per_stage = config.tf_epochs_per_stage;
  plan.discriminative.last_layer_lr = config.tf_peak_lr;
  plan.discriminative.n_groups = config.tf_layers + 2;
  plan.discriminative.decay_factor = config.tf_decay_factor;
  plan.stlr.peak_lr = config.tf_peak_lr;
  plan.stlr.cut_frac = config.tf_cut_frac;
  plan.stlr.ratio = config.tf_ratio;
  plan.stlr.total_steps = finetune_total_steps(plan, n_docs);

  const std::vector<double> lrs = discriminative_lrs(plan.discriminative);
  out << "step,group,lr\n";
  for (size_t step = 0; step < plan.stlr.total_steps; ++step) {
    const double base = stlr_lr(plan.stlr, step);
    for (size_t g = 0; g < lrs.size(); ++g) {
      out << step << ',' << g << ','
          << fmt_double(base * (lrs[g] / plan.discriminative.last_layer_lr)) << '\n';
    }
  }
}

void cmd_fixtures(const std::filesystem::path& out_dir, std::ostream& out) {
  std::filesystem::create_directories(out_dir);
  auto note = [&](const std::filesystem::path& path) { out << "wrote " << path.string() << '\n'; };

  const std::filesystem::path blobs = out_dir / "blobs.csv";
  write_numeric_csv(make_blobs(200, 1), blobs);
  note(blobs);
  const std::filesystem::path circles = out_dir / "circles.csv";
  write_numeric_csv(make_circles(200, 2), circles);
  note(circles);
  const std::filesystem::path moons = out_dir / "moons.csv";
  write_numeric_csv(make_moons(200, 3), moons);
  note(moons);
  const std::filesystem::path keyword = out_dir / "keyword.csv";
  write_corpus_csv(make_keyword_corpus(200, 4), keyword);
  note(keyword);
  const std::filesystem::path lexicon_corpus = out_dir / "lexicon_corpus.csv";
  write_corpus_csv(make_lexicon_corpus(200, 5), lexicon_corpus);
  note(lexicon_corpus);
  const std::filesystem::path lexicon = out_dir / "lexicon.tsv";
  write_lexicon_tsv(demo_lexicon(), lexicon);
  note(lexicon);
  const std::filesystem::path sentences = out_dir / "sentences.txt";
  write_lines(pretrain_sentences(), sentences);
  note(sentences);
  const std::filesystem::path stopwords = out_dir / "stopwords.txt";
  write_lines(demo_stopwords(), stopwords);
  note(stopwords);
}

}  // namespace textclf
