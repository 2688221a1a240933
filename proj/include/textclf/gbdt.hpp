#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "textclf/sparse.hpp"

namespace textclf {

struct GbdtParams {
  size_t n_rounds = 100;
  double learning_rate = 0.3;
  size_t max_depth = 6;
  double min_child_weight = 1.0;
  double gamma = 0.1;  // minimum loss reduction per split
  double subsample = 0.9;
  double colsample_bytree = 0.7;
  double lambda = 1.0;
  uint64_t seed = 0;
};

struct TreeNode {
  int32_t left = -1;  // negative on leaves
  int32_t right = -1;
  uint32_t feature = 0;
  double threshold = 0.0;
  double weight = 0.0;  // leaf value

  bool is_leaf() const { return left < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  // Routes left iff value < threshold; absent sparse entries read as 0.0.
  double evaluate(const SparseRow& row) const;
  size_t n_leaves() const;

  bool operator==(const Tree&) const = default;
};

struct GbdtEnsemble {
  std::vector<Tree> trees;
  double base_score = 0.0;  // log-odds of the positive rate
  double learning_rate = 0.3;
  size_t n_features = 0;
};

// 0.5*[GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l)] - gamma
double split_gain(double g_left, double h_left, double g_right, double h_right,
                  const GbdtParams& params);

// Exact greedy tree over the given row/column subsets. Thresholds sit midway
// between consecutive distinct feature values; a split must leave at least
// min_child_weight hessian mass on both sides and improve gain above zero.
// Ties prefer the lowest feature index, then the lowest threshold.
Tree build_tree(const SparseMatrix& x, const std::vector<double>& gradients,
                const std::vector<double>& hessians, std::span<const size_t> rows,
                std::span<const uint32_t> cols, const GbdtParams& params);

// Second-order boosting of the logistic loss for labels in {0,1}.
GbdtEnsemble train_gbdt(const SparseMatrix& x, const std::vector<uint32_t>& y,
                        const GbdtParams& params);

double predict_margin(const GbdtEnsemble& model, const SparseRow& row);

// Label 1 iff sigmoid(margin) >= 0.5.
std::vector<uint32_t> gbdt_predict(const GbdtEnsemble& model, const SparseMatrix& x);

}  // namespace textclf
