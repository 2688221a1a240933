#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "textclf/artifact.hpp"
#include "textclf/corpus.hpp"
#include "textclf/gbdt.hpp"
#include "textclf/svm.hpp"

namespace textclf {

// Flat key=value run configuration. File values load first; --set overrides
// win. Defaults follow the per-family hyperparameter lists in the README.
struct RunConfig {
  std::string model = "svm";  // lexicon | svm | gbdt | transformer
  std::string features = "tfidf";
  std::string stopword_filter = "auto";  // auto | on | off
  std::filesystem::path stopword_path;
  std::filesystem::path lexicon_path;
  double lexicon_threshold = 0.0;
  SplitSpec split;
  uint64_t seed = 0;
  std::filesystem::path out_dir = ".";

  SvmParams svm;
  GbdtParams gbdt;

  size_t tf_layers = 2;
  size_t tf_hidden = 64;
  size_t tf_heads = 4;
  size_t tf_ffn = 0;
  size_t tf_vocab_size = 2000;
  size_t tf_max_positions = 512;
  size_t tf_seq_len = 500;  // capped at max_positions when encoding
  size_t tf_batch_size = 16;
  double tf_peak_lr = 4e-5;
  double tf_cut_frac = 0.1;
  double tf_ratio = 32.0;
  double tf_decay_factor = 2.6;
  size_t tf_epochs_per_stage = 1;
  double tf_mask_rate = 0.15;
  uint32_t tf_n_classes = 2;      // classifier head size for pretrained artifacts
  std::filesystem::path tf_init;  // optional pretrained artifact

  size_t pretrain_steps = 200;
  size_t pretrain_batch_size = 16;
  size_t pretrain_max_len = 64;
};

// Applies one key=value entry; unknown keys and unparseable values are
// ConfigInvalid.
void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value);

// `#` comments and blank lines ignored; everything else must be key=value.
RunConfig load_run_config(const std::filesystem::path& path);

// Effective configuration as ordered key=value pairs, stored in artifacts.
std::map<std::string, std::string> config_snapshot(const RunConfig& config);

struct TrainOutcome {
  std::filesystem::path artifact_path;
  double train_acc = 0.0;
  double val_acc = 0.0;
};

// out_path empty selects <out_dir>/<model>.tclf. Prints the metrics line
// `train_acc=<x> val_acc=<y>`.
TrainOutcome cmd_train(const RunConfig& config, const std::filesystem::path& data_path,
                       std::ostream& out, const std::filesystem::path& out_path = {});

// Prints `accuracy=<x>`; data labels are matched to the model's label names.
double cmd_eval(const std::filesystem::path& artifact_path,
                const std::filesystem::path& data_path, std::ostream& out);

// One line per input: `label=<name>` plus `p=` (gbdt) or `probs=` (transformer).
void cmd_predict(const std::filesystem::path& artifact_path,
                 const std::vector<std::string>& texts, std::ostream& out);

// MLM+NSP pretraining over one sentence per line; prints initial/final joint
// loss and writes a transformer artifact.
TrainOutcome cmd_pretrain(const RunConfig& config, const std::filesystem::path& sentences_path,
                          std::ostream& out, const std::filesystem::path& out_path = {});

// Two-column leaderboard sorted ascending by accuracy (ties by name). With a
// data path the accuracy is re-evaluated, otherwise the stored one is used.
void cmd_report(const std::vector<std::filesystem::path>& artifact_paths,
                const std::filesystem::path& data_path, std::ostream& out);

// CSV `step,group,lr` over the full fine-tuning schedule for n_docs documents.
void cmd_schedule_dump(const RunConfig& config, size_t n_docs, std::ostream& out);

// Writes every synthetic dataset with fixed seeds; prints one line per file.
void cmd_fixtures(const std::filesystem::path& out_dir, std::ostream& out);

// Shared inference path: labels in the model's label space.
std::vector<uint32_t> predict_labels(const TrainedModel& model,
                                     const std::vector<Document>& docs);

}  // namespace textclf
