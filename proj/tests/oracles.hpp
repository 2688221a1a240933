#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

// Naive reference implementations the suites compare the library against.
// Everything here is dense, loop-based, and coded straight from the
// documented formulas; none of it shares logic with src/.
namespace oracle {

// RFC 4180 records, one vector of unescaped fields per row.
std::vector<std::vector<std::string>> parse_csv(const std::string& raw);

// Occurrence counts per (document, term) via nested loops.
std::vector<std::vector<double>> dense_counts(
    const std::vector<std::vector<std::string>>& doc_tokens,
    const std::vector<std::string>& terms);

// Number of documents containing each term at least once.
std::vector<size_t> dense_document_frequency(
    const std::vector<std::vector<std::string>>& doc_tokens,
    const std::vector<std::string>& terms);

// count * (ln((1+N)/(1+df)) + 1), then L2 row normalization.
std::vector<std::vector<double>> dense_tfidf(const std::vector<std::vector<double>>& counts,
                                             const std::vector<size_t>& df, size_t n_documents);

// Population variance over every entry of the matrix.
double dense_variance(const std::vector<std::vector<double>>& m);

// softmax(q k^T / sqrt(d_head)) v with masked keys excluded entirely.
Eigen::MatrixXd dense_attention(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k,
                                const Eigen::MatrixXd& v, const std::vector<uint8_t>& key_mask,
                                Eigen::MatrixXd* weights_out = nullptr);

struct RefSplitParams {
  size_t max_depth = 6;
  double min_child_weight = 1.0;
  double gamma = 0.1;
  double lambda = 1.0;
};

struct RefNode {
  int left = -1;
  int right = -1;
  uint32_t feature = 0;
  double threshold = 0.0;
  double weight = 0.0;
  double gain = 0.0;  // gain of the chosen split, already minus gamma

  bool is_leaf() const { return left < 0; }
};

struct RefTree {
  std::vector<RefNode> nodes;  // nodes[0] is the root
};

// Greedy tree by exhaustive scan over every (feature, midpoint threshold)
// candidate. Ties prefer the lowest feature index, then lowest threshold.
RefTree exhaustive_tree(const std::vector<std::vector<double>>& x,
                        const std::vector<double>& gradients,
                        const std::vector<double>& hessians, const RefSplitParams& params);

}  // namespace oracle
