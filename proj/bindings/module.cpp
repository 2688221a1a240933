#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "textclf/artifact.hpp"
#include "textclf/corpus.hpp"
#include "textclf/error.hpp"
#include "textclf/features.hpp"
#include "textclf/gbdt.hpp"
#include "textclf/lexicon.hpp"
#include "textclf/runner.hpp"
#include "textclf/schedule.hpp"
#include "textclf/sparse.hpp"
#include "textclf/svm.hpp"

namespace py = pybind11;
using namespace textclf;

namespace {

RunConfig config_from_entries(const std::map<std::string, std::string>& entries) {
  RunConfig config;
  for (const auto& [key, value] : entries) apply_config_entry(config, key, value);
  return config;
}

SparseMatrix dense_to_sparse(const std::vector<std::vector<double>>& x) {
  return SparseMatrix::from_dense(x);
}

std::vector<Document> docs_from_texts(const std::vector<std::string>& texts) {
  std::vector<Document> docs;
  for (size_t i = 0; i < texts.size(); ++i) docs.push_back({i, texts[i], std::nullopt});
  return docs;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "native core of the textclf toolkit";

  py::register_exception<Error>(m, "TextclfError");

  m.def(
      "tokenize",
      [](const std::string& text, bool lowercase, const std::vector<std::string>& stopwords,
         size_t min_token_len) {
        TokenizerConfig config;
        config.lowercase = lowercase;
        config.stopwords = {stopwords.begin(), stopwords.end()};
        config.min_token_len = min_token_len;
        return tokenize(text, config);
      },
      py::arg("text"), py::arg("lowercase") = true,
      py::arg("stopwords") = std::vector<std::string>{}, py::arg("min_token_len") = 1);

  m.def(
      "tfidf_matrix",
      [](const std::vector<std::string>& texts) {
        LabeledCorpus corpus;
        corpus.label_names = {"0"};
        for (size_t i = 0; i < texts.size(); ++i) {
          corpus.documents.push_back({i, texts[i], 0u});
        }
        const TokenizerConfig config;
        const Vocabulary vocab = build_vocabulary(corpus, config);
        const SparseMatrix counts = count_vectorize(corpus.documents, vocab, config);
        return std::make_pair(tfidf_transform(counts, vocab).to_dense(), vocab.index_to_token);
      },
      py::arg("texts"));

  m.def(
      "polarity_score",
      [](const std::string& text, const std::map<std::string, double>& entries,
         double default_polarity) {
        PolarityLexicon lex;
        lex.polarity = {entries.begin(), entries.end()};
        lex.default_polarity = default_polarity;
        return polarity_score({0, text, std::nullopt}, lex, TokenizerConfig{});
      },
      py::arg("text"), py::arg("entries"), py::arg("default_polarity") = 0.0);

  py::class_<SvmModel>(m, "SvmModel");
  m.def(
      "svm_train",
      [](const std::vector<std::vector<double>>& x, const std::vector<uint32_t>& y,
         const std::string& kernel, double c, std::optional<double> gamma) {
        SvmParams params;
        params.c = c;
        params.gamma = gamma;
        if (kernel == "linear") {
          params.kernel = Kernel::linear;
        } else if (kernel == "rbf") {
          params.kernel = Kernel::rbf;
        } else {
          throw Error(errc::config_invalid, "unknown kernel `" + kernel + "`");
        }
        return train_svm(dense_to_sparse(x), y, params);
      },
      py::arg("x"), py::arg("y"), py::arg("kernel") = "rbf", py::arg("c") = 1.0,
      py::arg("gamma") = std::nullopt);
  m.def(
      "svm_predict",
      [](const SvmModel& model, const std::vector<std::vector<double>>& x) {
        return svm_predict(model, dense_to_sparse(x));
      },
      py::arg("model"), py::arg("x"));

  py::class_<GbdtEnsemble>(m, "GbdtEnsemble");
  m.def(
      "gbdt_train",
      [](const std::vector<std::vector<double>>& x, const std::vector<uint32_t>& y,
         size_t n_rounds, double learning_rate, size_t max_depth, uint64_t seed) {
        GbdtParams params;
        params.n_rounds = n_rounds;
        params.learning_rate = learning_rate;
        params.max_depth = max_depth;
        params.seed = seed;
        return train_gbdt(dense_to_sparse(x), y, params);
      },
      py::arg("x"), py::arg("y"), py::arg("n_rounds") = 100, py::arg("learning_rate") = 0.3,
      py::arg("max_depth") = 6, py::arg("seed") = 0);
  m.def(
      "gbdt_predict",
      [](const GbdtEnsemble& model, const std::vector<std::vector<double>>& x) {
        return gbdt_predict(model, dense_to_sparse(x));
      },
      py::arg("model"), py::arg("x"));

  m.def(
      "stlr_lr",
      [](double peak_lr, size_t total_steps, double cut_frac, double ratio, size_t step) {
        return stlr_lr({peak_lr, total_steps, cut_frac, ratio}, step);
      },
      py::arg("peak_lr"), py::arg("total_steps"), py::arg("cut_frac"), py::arg("ratio"),
      py::arg("step"));
  m.def(
      "discriminative_lrs",
      [](double last_layer_lr, size_t n_groups, double decay_factor) {
        return discriminative_lrs({last_layer_lr, n_groups, decay_factor});
      },
      py::arg("last_layer_lr"), py::arg("n_groups"), py::arg("decay_factor") = 2.6);
  m.def(
      "unfreeze_mask",
      [](size_t n_groups, size_t epochs_per_stage, size_t stage) {
        return unfreeze_mask({n_groups, epochs_per_stage}, stage);
      },
      py::arg("n_groups"), py::arg("epochs_per_stage"), py::arg("stage"));

  m.def(
      "train_file",
      [](const std::filesystem::path& data, const std::map<std::string, std::string>& config,
         const std::string& out_path) {
        std::ostringstream sink;
        const TrainOutcome outcome =
            cmd_train(config_from_entries(config), data, sink, std::filesystem::path(out_path));
        return py::make_tuple(outcome.artifact_path, outcome.train_acc, outcome.val_acc);
      },
      py::arg("data"), py::arg("config") = std::map<std::string, std::string>{},
      py::arg("out_path") = std::string{});

  m.def(
      "pretrain_file",
      [](const std::filesystem::path& data, const std::map<std::string, std::string>& config,
         const std::string& out_path) {
        std::ostringstream sink;
        const TrainOutcome outcome = cmd_pretrain(config_from_entries(config), data, sink,
                                                  std::filesystem::path(out_path));
        return py::make_tuple(outcome.artifact_path, outcome.train_acc, outcome.val_acc);
      },
      py::arg("data"), py::arg("config") = std::map<std::string, std::string>{},
      py::arg("out_path") = std::string{});

  m.def(
      "eval_file",
      [](const std::filesystem::path& model, const std::filesystem::path& data) {
        std::ostringstream sink;
        return cmd_eval(model, data, sink);
      },
      py::arg("model"), py::arg("data"));

  m.def(
      "predict_texts",
      [](const std::filesystem::path& model_path, const std::vector<std::string>& texts) {
        const TrainedModel model = load_model(model_path);
        std::vector<std::string> names;
        for (uint32_t label : predict_labels(model, docs_from_texts(texts))) {
          names.push_back(model.label_names[label]);
        }
        return names;
      },
      py::arg("model"), py::arg("texts"));

  m.def(
      "report",
      [](const std::vector<std::filesystem::path>& models, const std::string& data) {
        std::ostringstream out;
        cmd_report(models, std::filesystem::path(data), out);
        return out.str();
      },
      py::arg("models"), py::arg("data") = std::string{});
}
