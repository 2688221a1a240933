#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace oracle {

std::vector<std::vector<std::string>> parse_csv(const std::string& raw) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool any = false;

  size_t i = 0;
  while (i < raw.size()) {
    const char c = raw[i];
    if (quoted) {
      if (c == '"' && i + 1 < raw.size() && raw[i + 1] == '"') {
        field.push_back('"');
        i += 2;
        continue;
      }
      if (c == '"') {
        quoted = false;
        ++i;
        continue;
      }
      field.push_back(c);
      ++i;
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
      ++i;
      continue;
    }
    if (c == ',') {
      fields.push_back(field);
      field.clear();
      any = true;
      ++i;
      continue;
    }
    if (c == '\r' && i + 1 < raw.size() && raw[i + 1] == '\n') {
      ++i;
      continue;
    }
    if (c == '\n') {
      if (any || !fields.empty()) {
        fields.push_back(field);
        records.push_back(fields);
      }
      fields.clear();
      field.clear();
      any = false;
      ++i;
      continue;
    }
    field.push_back(c);
    any = true;
    ++i;
  }
  if (quoted) throw std::runtime_error("reference parser: unterminated quote");
  if (any || !fields.empty()) {
    fields.push_back(field);
    records.push_back(fields);
  }
  return records;
}

std::vector<std::vector<double>> dense_counts(
    const std::vector<std::vector<std::string>>& doc_tokens,
    const std::vector<std::string>& terms) {
  std::vector<std::vector<double>> counts(doc_tokens.size(),
                                          std::vector<double>(terms.size(), 0.0));
  for (size_t d = 0; d < doc_tokens.size(); ++d) {
    for (size_t t = 0; t < terms.size(); ++t) {
      for (const std::string& token : doc_tokens[d]) {
        if (token == terms[t]) counts[d][t] += 1.0;
      }
    }
  }
  return counts;
}

std::vector<size_t> dense_document_frequency(
    const std::vector<std::vector<std::string>>& doc_tokens,
    const std::vector<std::string>& terms) {
  std::vector<size_t> df(terms.size(), 0);
  for (size_t t = 0; t < terms.size(); ++t) {
    for (const auto& tokens : doc_tokens) {
      if (std::find(tokens.begin(), tokens.end(), terms[t]) != tokens.end()) ++df[t];
    }
  }
  return df;
}

std::vector<std::vector<double>> dense_tfidf(const std::vector<std::vector<double>>& counts,
                                             const std::vector<size_t>& df, size_t n_documents) {
  std::vector<std::vector<double>> out = counts;
  for (auto& row : out) {
    for (size_t t = 0; t < row.size(); ++t) {
      const double idf =
          std::log((1.0 + static_cast<double>(n_documents)) / (1.0 + static_cast<double>(df[t]))) +
          1.0;
      row[t] *= idf;
    }
    double norm = 0.0;
    for (const double v : row) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (double& v : row) v /= norm;
    }
  }
  return out;
}

double dense_variance(const std::vector<std::vector<double>>& m) {
  size_t count = 0;
  double sum = 0.0;
  for (const auto& row : m) {
    for (const double v : row) {
      sum += v;
      ++count;
    }
  }
  const double mean = sum / static_cast<double>(count);
  double ss = 0.0;
  for (const auto& row : m) {
    for (const double v : row) ss += (v - mean) * (v - mean);
  }
  return ss / static_cast<double>(count);
}

Eigen::MatrixXd dense_attention(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k,
                                const Eigen::MatrixXd& v, const std::vector<uint8_t>& key_mask,
                                Eigen::MatrixXd* weights_out) {
  const Eigen::Index n_q = q.rows();
  const Eigen::Index n_k = k.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));

  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(n_q, n_k);
  for (Eigen::Index r = 0; r < n_q; ++r) {
    double peak = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < n_k; ++c) {
      if (!key_mask[static_cast<size_t>(c)]) continue;
      double score = 0.0;
      for (Eigen::Index d = 0; d < q.cols(); ++d) score += q(r, d) * k(c, d);
      score *= scale;
      peak = std::max(peak, score);
    }
    double total = 0.0;
    for (Eigen::Index c = 0; c < n_k; ++c) {
      if (!key_mask[static_cast<size_t>(c)]) continue;
      double score = 0.0;
      for (Eigen::Index d = 0; d < q.cols(); ++d) score += q(r, d) * k(c, d);
      weights(r, c) = std::exp(score * scale - peak);
      total += weights(r, c);
    }
    for (Eigen::Index c = 0; c < n_k; ++c) weights(r, c) /= total;
  }
  if (weights_out) *weights_out = weights;

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_q, v.cols());
  for (Eigen::Index r = 0; r < n_q; ++r) {
    for (Eigen::Index c = 0; c < n_k; ++c) {
      for (Eigen::Index d = 0; d < v.cols(); ++d) out(r, d) += weights(r, c) * v(c, d);
    }
  }
  return out;
}

namespace {

struct Candidate {
  bool found = false;
  uint32_t feature = 0;
  double threshold = 0.0;
  double gain = -std::numeric_limits<double>::infinity();
};

double leaf_weight(const std::vector<size_t>& rows, const std::vector<double>& g,
                   const std::vector<double>& h, double lambda) {
  double gs = 0.0;
  double hs = 0.0;
  for (const size_t r : rows) {
    gs += g[r];
    hs += h[r];
  }
  return -gs / (hs + lambda);
}

Candidate best_split(const std::vector<std::vector<double>>& x, const std::vector<double>& g,
                     const std::vector<double>& h, const std::vector<size_t>& rows,
                     const RefSplitParams& params) {
  double g_total = 0.0;
  double h_total = 0.0;
  for (const size_t r : rows) {
    g_total += g[r];
    h_total += h[r];
  }
  const double parent = g_total * g_total / (h_total + params.lambda);

  Candidate best;
  const size_t n_features = x.empty() ? 0 : x[0].size();
  for (uint32_t f = 0; f < n_features; ++f) {
    std::vector<double> values;
    values.reserve(rows.size());
    for (const size_t r : rows) values.push_back(x[r][f]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());

    for (size_t i = 0; i + 1 < values.size(); ++i) {
      const double threshold = (values[i] + values[i + 1]) / 2.0;
      double gl = 0.0, hl = 0.0, gr = 0.0, hr = 0.0;
      for (const size_t r : rows) {
        if (x[r][f] < threshold) {
          gl += g[r];
          hl += h[r];
        } else {
          gr += g[r];
          hr += h[r];
        }
      }
      if (hl < params.min_child_weight || hr < params.min_child_weight) continue;
      const double gain = 0.5 * (gl * gl / (hl + params.lambda) + gr * gr / (hr + params.lambda) -
                                 parent) -
                          params.gamma;
      if (gain > best.gain) {
        best = {true, f, threshold, gain};
      }
    }
  }
  return best;
}

int grow(const std::vector<std::vector<double>>& x, const std::vector<double>& g,
         const std::vector<double>& h, const std::vector<size_t>& rows, size_t depth,
         const RefSplitParams& params, RefTree& tree) {
  const int index = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();

  Candidate split;
  if (depth < params.max_depth) split = best_split(x, g, h, rows, params);
  if (!split.found || split.gain <= 0.0) {
    tree.nodes[index].weight = leaf_weight(rows, g, h, params.lambda);
    return index;
  }

  std::vector<size_t> left_rows;
  std::vector<size_t> right_rows;
  for (const size_t r : rows) {
    (x[r][split.feature] < split.threshold ? left_rows : right_rows).push_back(r);
  }
  tree.nodes[index].feature = split.feature;
  tree.nodes[index].threshold = split.threshold;
  tree.nodes[index].gain = split.gain;
  const int left = grow(x, g, h, left_rows, depth + 1, params, tree);
  const int right = grow(x, g, h, right_rows, depth + 1, params, tree);
  tree.nodes[index].left = left;
  tree.nodes[index].right = right;
  return index;
}

}  // namespace

RefTree exhaustive_tree(const std::vector<std::vector<double>>& x,
                        const std::vector<double>& gradients,
                        const std::vector<double>& hessians, const RefSplitParams& params) {
  RefTree tree;
  std::vector<size_t> rows(x.size());
  std::iota(rows.begin(), rows.end(), size_t{0});
  grow(x, gradients, hessians, rows, 0, params, tree);
  return tree;
}

}  // namespace oracle
