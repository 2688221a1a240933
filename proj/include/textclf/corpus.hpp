#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace textclf {

struct Document {
  size_t id = 0;
  std::string text;
  std::optional<uint32_t> label;

  bool operator==(const Document&) const = default;
};

// Documents with optional integer-encoded labels. Ids are dense from 0 and
// every present label indexes into label_names.
struct LabeledCorpus {
  std::vector<Document> documents;
  std::vector<std::string> label_names;

  size_t size() const { return documents.size(); }
  bool fully_labeled() const;

  bool operator==(const LabeledCorpus&) const = default;
};

enum class CsvFormat { text_label, text_only };

// Loads an RFC 4180 CSV. text_label expects header `text,label`; text_only
// expects header `text`. Label codes follow first appearance order; an empty
// label field leaves the document unlabeled.
LabeledCorpus load_corpus(const std::filesystem::path& path,
                          CsvFormat format = CsvFormat::text_label);

struct SplitSpec {
  double train_fraction = 0.9;
  uint64_t seed = 0;
  bool stratified = true;
};

// Deterministic (train, test) partition. Train gets floor(fraction * n)
// documents overall; per-stratum quotas are floors with the remainder
// distributed by seeded shuffle, so stratified splits stay within one
// document of the requested fraction per label.
std::pair<LabeledCorpus, LabeledCorpus> split(const LabeledCorpus& corpus,
                                              const SplitSpec& spec);

double accuracy(std::span<const uint32_t> predicted, std::span<const uint32_t> actual);

}  // namespace textclf
