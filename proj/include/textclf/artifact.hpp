#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "textclf/features.hpp"
#include "textclf/gbdt.hpp"
#include "textclf/lexicon.hpp"
#include "textclf/svm.hpp"
#include "textclf/transformer.hpp"

namespace textclf {

// Everything a trained family needs at inference time, plus the metadata the
// eval and report commands surface.
struct TrainedModel {
  std::string family;  // lexicon | svm | gbdt | transformer
  std::vector<std::string> label_names;
  double train_acc = 0.0;
  double val_acc = 0.0;
  std::map<std::string, std::string> config_snapshot;

  TokenizerConfig tokenizer;
  std::optional<Vocabulary> vocab;
  bool use_tfidf = true;
  size_t numeric_features = 0;  // nonzero marks comma-separated numeric rows

  PolarityLexicon lexicon;
  double lexicon_threshold = 0.0;

  std::optional<SvmModel> svm;
  std::optional<GbdtEnsemble> gbdt;
  std::optional<TransformerModel> transformer;
  size_t seq_len = 0;  // transformer encode length
};

// Plain-text `textclf-artifact v1` header (family, accuracies, config
// snapshot) followed by named length-prefixed little-endian binary sections.
// Save -> load -> save reproduces the file byte for byte.
void save_model(const TrainedModel& model, const std::filesystem::path& path);

TrainedModel load_model(const std::filesystem::path& path);

}  // namespace textclf
