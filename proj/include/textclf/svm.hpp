#pragma once

#include <cstdint>
#include <functional>
#include <list>
#include <optional>
#include <unordered_map>
#include <vector>

#include "textclf/sparse.hpp"

namespace textclf {

enum class Kernel { rbf, linear };

struct SvmParams {
  double c = 1.0;
  Kernel kernel = Kernel::rbf;
  std::optional<double> gamma;  // empty selects "scale": 1/(n_cols * variance)
  double tolerance = 1e-3;
  size_t max_passes = 1000;  // iteration budget is max_passes * n_rows
  size_t cache_mb = 200;
};

struct BinarySvm {
  SparseMatrix support_vectors;
  std::vector<double> dual_coefficients;  // alpha_i * y_i per support vector
  double bias = 0.0;
  bool converged = true;
};

struct SvmModel {
  Kernel kernel = Kernel::rbf;
  double gamma_value = 0.0;  // resolved at training time
  size_t n_features = 0;
  uint32_t n_classes = 0;
  std::vector<BinarySvm> binary;  // one per class; binary problems keep a single entry

  bool all_converged() const;
};

// Optional per-iteration record of the SMO run.
struct SmoTrace {
  std::vector<double> objective;  // dual objective, one entry per pair update
  size_t iterations = 0;
  double final_violation = 0.0;  // m - M at exit
};

// 1 / (n_cols * variance of all entries, zeros included); 1/n_cols when the
// variance degenerates to zero.
double scale_gamma(const SparseMatrix& x);

double rbf_kernel(const SparseRow& x, const SparseRow& y, double gamma);

// LRU cache of full kernel rows, capacity derived from a megabyte budget.
class KernelRowCache {
 public:
  KernelRowCache(size_t n_rows, size_t cache_mb);

  const std::vector<double>& row(size_t i,
                                 const std::function<void(size_t, std::vector<double>&)>& fill);

  size_t capacity_rows() const { return capacity_rows_; }
  size_t hits() const { return hits_; }
  size_t misses() const { return misses_; }

 private:
  size_t n_rows_;
  size_t capacity_rows_;
  size_t hits_ = 0;
  size_t misses_ = 0;
  std::list<std::pair<size_t, std::vector<double>>> lru_;  // front = most recent
  std::unordered_map<size_t, decltype(lru_)::iterator> index_;
};

// SMO on the C-SVM dual with max-violating-pair selection. Labels are +/-1.
// On a exhausted iteration budget the best iterate is returned with the
// converged flag cleared.
SvmModel train_binary_svm(const SparseMatrix& x, const std::vector<int>& y,
                          const SvmParams& params, SmoTrace* trace = nullptr);

// One-vs-rest wrapper over train_binary_svm for labels 0..K-1. A two-class
// problem trains a single machine with class 0 on the positive side.
SvmModel train_svm(const SparseMatrix& x, const std::vector<uint32_t>& y, const SvmParams& params);

double svm_decision(const SvmModel& model, const BinarySvm& machine, const SparseRow& row);

// Argmax over per-class decision values; ties go to the lowest class index.
std::vector<uint32_t> svm_predict(const SvmModel& model, const SparseMatrix& x);

}  // namespace textclf
