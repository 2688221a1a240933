#include "textclf/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "textclf/error.hpp"
#include "textclf/rng.hpp"

namespace textclf {

double Tree::evaluate(const SparseRow& row) const {
  const TreeNode* node = &nodes[0];
  while (!node->is_leaf()) {
    const double value = row.value_at(node->feature);
    node = &nodes[value < node->threshold ? node->left : node->right];
  }
  return node->weight;
}

size_t Tree::n_leaves() const {
  return static_cast<size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

double split_gain(double g_left, double h_left, double g_right, double h_right,
                  const GbdtParams& params) {
  const double l = params.lambda;
  const double joint = g_left + g_right;
  return 0.5 * (g_left * g_left / (h_left + l) + g_right * g_right / (h_right + l) -
                joint * joint / (h_left + h_right + l)) -
         params.gamma;
}

namespace {

struct TreeBuilder {
  const SparseMatrix& x;
  const std::vector<double>& g;
  const std::vector<double>& h;
  std::span<const uint32_t> cols;
  const GbdtParams& params;
  std::vector<TreeNode> nodes;

  int32_t build(std::vector<size_t>& rows, size_t depth) {
    double g_sum = 0.0, h_sum = 0.0;
    for (size_t r : rows) {
      g_sum += g[r];
      h_sum += h[r];
    }

    const int32_t idx = static_cast<int32_t>(nodes.size());
    nodes.emplace_back();

    double best_gain = 0.0;
    uint32_t best_feature = 0;
    double best_threshold = 0.0;
    bool found = false;

    if (depth < params.max_depth && rows.size() >= 2) {
      std::vector<std::pair<double, size_t>> ordered(rows.size());
      for (uint32_t f : cols) {
        for (size_t k = 0; k < rows.size(); ++k) {
          ordered[k] = {x.row(rows[k]).value_at(f), rows[k]};
        }
        std::sort(ordered.begin(), ordered.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        double gl = 0.0, hl = 0.0;
        for (size_t k = 0; k + 1 < ordered.size(); ++k) {
          gl += g[ordered[k].second];
          hl += h[ordered[k].second];
          if (ordered[k].first == ordered[k + 1].first) continue;
          const double hr = h_sum - hl;
          if (hl < params.min_child_weight || hr < params.min_child_weight) continue;
          const double gain = split_gain(gl, hl, g_sum - gl, hr, params);
          if (gain > best_gain) {
            best_gain = gain;
            best_feature = f;
            best_threshold = 0.5 * (ordered[k].first + ordered[k + 1].first);
            found = true;
          }
        }
      }
    }

    if (!found) {
      nodes[idx].weight = -g_sum / (h_sum + params.lambda);
      return idx;
    }

    std::vector<size_t> left_rows, right_rows;
    for (size_t r : rows) {
      (x.row(r).value_at(best_feature) < best_threshold ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    nodes[idx].feature = best_feature;
    nodes[idx].threshold = best_threshold;
    const int32_t left = build(left_rows, depth + 1);
    const int32_t right = build(right_rows, depth + 1);
    nodes[idx].left = left;
    nodes[idx].right = right;
    return idx;
  }
};

double sigmoid(double m) { return 1.0 / (1.0 + std::exp(-m)); }

void validate_params(const GbdtParams& p) {
  const bool ok = p.n_rounds > 0 && p.learning_rate > 0.0 && p.max_depth > 0 &&
                  p.min_child_weight >= 0.0 && p.gamma >= 0.0 && p.subsample > 0.0 &&
                  p.subsample <= 1.0 && p.colsample_bytree > 0.0 && p.colsample_bytree <= 1.0 &&
                  p.lambda >= 0.0;
  if (!ok) throw Error(errc::config_invalid, "gbdt params out of range");
}

std::vector<size_t> sample_without_replacement(size_t n, double rate, Rng& rng) {
  std::vector<size_t> all(n);
  std::iota(all.begin(), all.end(), size_t{0});
  rng.shuffle(all);
  const auto want = static_cast<size_t>(std::llround(rate * static_cast<double>(n)));
  all.resize(std::clamp<size_t>(want, 1, n));
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

Tree build_tree(const SparseMatrix& x, const std::vector<double>& gradients,
                const std::vector<double>& hessians, std::span<const size_t> rows,
                std::span<const uint32_t> cols, const GbdtParams& params) {
  if (gradients.size() != x.rows() || hessians.size() != x.rows()) {
    throw Error(errc::length_mismatch, "gradient/hessian count does not match row count");
  }
  TreeBuilder builder{x, gradients, hessians, cols, params, {}};
  std::vector<size_t> root_rows(rows.begin(), rows.end());
  builder.build(root_rows, 0);
  Tree tree;
  tree.nodes = std::move(builder.nodes);
  return tree;
}

GbdtEnsemble train_gbdt(const SparseMatrix& x, const std::vector<uint32_t>& y,
                        const GbdtParams& params) {
  validate_params(params);
  const size_t n = x.rows();
  if (n == 0) throw Error(errc::empty_training_set, "no rows to train on");
  if (y.size() != n) throw Error(errc::length_mismatch, "label count does not match row count");

  size_t positives = 0;
  for (uint32_t label : y) {
    if (label > 1) throw Error(errc::config_invalid, "gbdt labels must be 0 or 1");
    positives += label;
  }
  if (positives == 0 || positives == n) {
    throw Error(errc::single_class_input, "gbdt needs both classes present");
  }

  const double p0 = static_cast<double>(positives) / static_cast<double>(n);
  GbdtEnsemble model;
  model.base_score = std::log(p0 / (1.0 - p0));
  model.learning_rate = params.learning_rate;
  model.n_features = x.cols();
  model.trees.reserve(params.n_rounds);

  std::vector<double> margin(n, model.base_score);
  std::vector<double> grad(n), hess(n);
  std::vector<uint32_t> all_cols(x.cols());
  std::iota(all_cols.begin(), all_cols.end(), 0u);

  Rng rng(params.seed);
  for (size_t round = 0; round < params.n_rounds; ++round) {
    for (size_t i = 0; i < n; ++i) {
      const double p = sigmoid(margin[i]);
      grad[i] = p - static_cast<double>(y[i]);
      hess[i] = p * (1.0 - p);
    }

    const std::vector<size_t> rows = sample_without_replacement(n, params.subsample, rng);
    std::vector<uint32_t> cols;
    {
      std::vector<size_t> picked =
          sample_without_replacement(x.cols(), params.colsample_bytree, rng);
      cols.assign(picked.begin(), picked.end());
    }

    Tree tree = build_tree(x, grad, hess, rows, cols, params);
    for (size_t i = 0; i < n; ++i) {
      margin[i] += params.learning_rate * tree.evaluate(x.row(i));
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

double predict_margin(const GbdtEnsemble& model, const SparseRow& row) {
  if (row.dim != model.n_features) {
    throw Error(errc::dimension_mismatch, "feature dimension does not match training");
  }
  double margin = model.base_score;
  for (const Tree& tree : model.trees) {
    margin += model.learning_rate * tree.evaluate(row);
  }
  return margin;
}

std::vector<uint32_t> gbdt_predict(const GbdtEnsemble& model, const SparseMatrix& x) {
  std::vector<uint32_t> out(x.rows());
  for (size_t i = 0; i < x.rows(); ++i) {
    out[i] = predict_margin(model, x.row(i)) >= 0.0 ? 1u : 0u;
  }
  return out;
}

}  // namespace textclf
