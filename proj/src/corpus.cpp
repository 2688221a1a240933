#include "textclf/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "textclf/error.hpp"
#include "textclf/rng.hpp"
#include "unicode.hpp"

namespace textclf {

bool LabeledCorpus::fully_labeled() const {
  return std::all_of(documents.begin(), documents.end(),
                     [](const Document& d) { return d.label.has_value(); });
}

namespace {

struct CsvRecord {
  std::vector<std::string> fields;
  size_t line = 0;  // 1-based line where the record starts
};

// RFC 4180 state machine. Quoted fields may contain commas, doubled quotes
// and line breaks; records end at an unquoted newline.
std::vector<CsvRecord> parse_csv(const std::string& content) {
  std::vector<CsvRecord> records;
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  bool record_has_data = false;
  size_t line = 1;
  size_t record_line = 1;

  auto end_field = [&]() {
    fields.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&]() {
    end_field();
    records.push_back({std::move(fields), record_line});
    fields.clear();
    record_has_data = false;
  };

  for (size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field.empty() && !field_was_quoted) {
          in_quotes = true;
          field_was_quoted = true;
          record_has_data = true;
        } else {
          throw Error(errc::malformed_row,
                      "stray quote at line " + std::to_string(line));
        }
        break;
      case ',':
        end_field();
        record_has_data = true;
        break;
      case '\r':
        if (i + 1 < content.size() && content[i + 1] == '\n') break;  // CRLF
        [[fallthrough]];
      case '\n':
        if (record_has_data || !fields.empty()) end_record();
        ++line;
        record_line = line;
        break;
      default:
        field.push_back(c);
        record_has_data = true;
        break;
    }
  }
  if (in_quotes) {
    throw Error(errc::malformed_row,
                "unterminated quote in record starting at line " +
                    std::to_string(record_line));
  }
  if (record_has_data || !fields.empty()) end_record();
  return records;
}

}  // namespace

LabeledCorpus load_corpus(const std::filesystem::path& path, CsvFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(errc::missing_file, path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::string content = buffer.str();
  if (content.starts_with("\xEF\xBB\xBF")) content.erase(0, 3);

  const auto records = parse_csv(content);
  const size_t arity = format == CsvFormat::text_label ? 2 : 1;
  const char* expected_header = format == CsvFormat::text_label ? "text,label" : "text";
  if (records.empty() || records.front().fields.size() != arity ||
      records.front().fields[0] != "text" ||
      (arity == 2 && records.front().fields[1] != "label")) {
    throw Error(errc::malformed_row,
                std::string("expected header `") + expected_header + "`");
  }

  LabeledCorpus corpus;
  std::unordered_map<std::string, uint32_t> label_codes;
  for (size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != arity) {
      throw Error(errc::malformed_row,
                  "expected " + std::to_string(arity) + " fields at line " +
                      std::to_string(rec.line));
    }
    for (const auto& f : rec.fields) {
      if (!unicode::is_valid_utf8(f)) {
        throw Error(errc::malformed_row,
                    "invalid UTF-8 at line " + std::to_string(rec.line));
      }
    }
    Document doc;
    doc.id = corpus.documents.size();
    doc.text = rec.fields[0];
    if (format == CsvFormat::text_label && !rec.fields[1].empty()) {
      const std::string& name = rec.fields[1];
      auto it = label_codes.find(name);
      if (it == label_codes.end()) {
        it = label_codes.emplace(name, static_cast<uint32_t>(corpus.label_names.size())).first;
        corpus.label_names.push_back(name);
      }
      doc.label = it->second;
    }
    corpus.documents.push_back(std::move(doc));
  }
  if (corpus.documents.empty()) {
    throw Error(errc::empty_corpus, path.string());
  }
  return corpus;
}

std::pair<LabeledCorpus, LabeledCorpus> split(const LabeledCorpus& corpus,
                                              const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw Error(errc::config_invalid, "train_fraction must be in (0,1)");
  }
  if (spec.stratified && !corpus.fully_labeled()) {
    throw Error(errc::unlabeled_document, "stratified split requires labels");
  }

  // Strata hold document indices in corpus order.
  std::map<uint32_t, std::vector<size_t>> strata;
  if (spec.stratified) {
    for (size_t i = 0; i < corpus.documents.size(); ++i) {
      strata[*corpus.documents[i].label].push_back(i);
    }
  } else {
    auto& all = strata[0];
    all.resize(corpus.documents.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = i;
  }

  Rng rng(spec.seed);
  const size_t n = corpus.documents.size();
  const size_t train_total =
      static_cast<size_t>(std::floor(spec.train_fraction * static_cast<double>(n)));

  std::vector<uint32_t> keys;
  std::vector<size_t> quota;
  std::vector<double> remainder;
  size_t assigned = 0;
  for (const auto& [label, docs] : strata) {
    const double exact = spec.train_fraction * static_cast<double>(docs.size());
    const size_t q = static_cast<size_t>(std::floor(exact));
    keys.push_back(label);
    quota.push_back(q);
    remainder.push_back(exact - static_cast<double>(q));
    assigned += q;
  }
  // Distribute the leftover up to the global floor: largest fractional
  // remainder first, ties broken by seeded shuffle.
  std::vector<size_t> order(keys.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return remainder[a] > remainder[b]; });
  size_t extras = train_total > assigned ? train_total - assigned : 0;
  for (size_t i = 0; i < order.size() && extras > 0; ++i) {
    const size_t s = order[i];
    if (quota[s] < strata[keys[s]].size()) {
      ++quota[s];
      --extras;
    }
  }

  std::vector<char> in_train(n, 0);
  for (size_t s = 0; s < keys.size(); ++s) {
    std::vector<size_t> docs = strata[keys[s]];
    rng.shuffle(docs);
    for (size_t i = 0; i < quota[s] && i < docs.size(); ++i) in_train[docs[i]] = 1;
  }

  auto collect = [&](bool train_side) {
    LabeledCorpus side;
    side.label_names = corpus.label_names;
    for (size_t i = 0; i < n; ++i) {
      if ((in_train[i] != 0) == train_side) {
        Document doc = corpus.documents[i];
        doc.id = side.documents.size();
        side.documents.push_back(std::move(doc));
      }
    }
    return side;
  };
  return {collect(true), collect(false)};
}

double accuracy(std::span<const uint32_t> predicted, std::span<const uint32_t> actual) {
  if (predicted.size() != actual.size()) {
    throw Error(errc::length_mismatch,
                std::to_string(predicted.size()) + " vs " + std::to_string(actual.size()));
  }
  if (predicted.empty()) {
    throw Error(errc::empty_input, "accuracy over empty lists");
  }
  size_t hits = 0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] == actual[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

}  // namespace textclf
