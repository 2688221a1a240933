#include "textclf/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "textclf/error.hpp"

namespace textclf {

bool SvmModel::all_converged() const {
  return std::all_of(binary.begin(), binary.end(),
                     [](const BinarySvm& m) { return m.converged; });
}

double scale_gamma(const SparseMatrix& x) {
  if (x.rows() == 0 || x.cols() == 0) {
    throw Error(errc::empty_matrix, "scale_gamma needs a non-empty matrix");
  }
  const double n_total = static_cast<double>(x.rows()) * static_cast<double>(x.cols());
  double sum = 0.0;
  for (double v : x.values()) sum += v;
  const double mean = sum / n_total;

  double sq_dev = 0.0;
  for (double v : x.values()) sq_dev += (v - mean) * (v - mean);
  sq_dev += (n_total - static_cast<double>(x.nnz())) * mean * mean;  // implicit zeros

  const double var = sq_dev / n_total;
  if (var <= 0.0) return 1.0 / static_cast<double>(x.cols());
  return 1.0 / (static_cast<double>(x.cols()) * var);
}

double rbf_kernel(const SparseRow& x, const SparseRow& y, double gamma) {
  if (x.dim != y.dim) {
    throw Error(errc::dimension_mismatch, "rbf_kernel rows have different dimensionality");
  }
  return std::exp(-gamma * squared_distance(x, y));
}

KernelRowCache::KernelRowCache(size_t n_rows, size_t cache_mb) : n_rows_(n_rows) {
  const size_t row_bytes = std::max<size_t>(1, n_rows * sizeof(double));
  capacity_rows_ = std::max<size_t>(2, cache_mb * 1024 * 1024 / row_bytes);
}

const std::vector<double>& KernelRowCache::row(
    size_t i, const std::function<void(size_t, std::vector<double>&)>& fill) {
  auto it = index_.find(i);
  if (it != index_.end()) {
    ++hits_;
    lru_.splice(lru_.begin(), lru_, it->second);
    return lru_.front().second;
  }
  ++misses_;
  if (lru_.size() >= capacity_rows_) {
    index_.erase(lru_.back().first);
    lru_.pop_back();
  }
  lru_.emplace_front(i, std::vector<double>());
  fill(i, lru_.front().second);
  index_[i] = lru_.begin();
  return lru_.front().second;
}

namespace {

double kernel_between(Kernel kind, const SparseRow& a, const SparseRow& b, double gamma) {
  switch (kind) {
    case Kernel::rbf:
      return rbf_kernel(a, b, gamma);
    case Kernel::linear:
      return dot(a, b);
  }
  return 0.0;
}

}  // namespace

SvmModel train_binary_svm(const SparseMatrix& x, const std::vector<int>& y,
                          const SvmParams& params, SmoTrace* trace) {
  const size_t n = x.rows();
  if (n == 0) throw Error(errc::empty_training_set, "no rows to train on");
  if (y.size() != n) throw Error(errc::length_mismatch, "label count does not match row count");
  if (params.c <= 0.0 || params.tolerance <= 0.0 || params.max_passes == 0) {
    throw Error(errc::config_invalid, "svm params require c > 0, tolerance > 0, max_passes > 0");
  }
  bool has_pos = false, has_neg = false;
  for (int label : y) {
    if (label == 1) has_pos = true;
    else if (label == -1) has_neg = true;
    else throw Error(errc::config_invalid, "binary svm labels must be +1 or -1");
  }
  if (!has_pos || !has_neg) {
    throw Error(errc::single_class_input, "binary svm needs both classes present");
  }

  const double gamma = params.gamma ? *params.gamma : scale_gamma(x);
  const double c = params.c;

  std::vector<double> sq_norm(n);
  for (size_t i = 0; i < n; ++i) sq_norm[i] = x.row(i).squared_norm();

  KernelRowCache cache(n, params.cache_mb);
  auto fill_row = [&](size_t r, std::vector<double>& out) {
    out.resize(n);
    const SparseRow xr = x.row(r);
    for (size_t k = 0; k < n; ++k) {
      if (params.kernel == Kernel::linear) {
        out[k] = dot(xr, x.row(k));
      } else {
        const double d2 = std::max(0.0, sq_norm[r] + sq_norm[k] - 2.0 * dot(xr, x.row(k)));
        out[k] = std::exp(-gamma * d2);
      }
    }
  };
  auto diag = [&](size_t r) {
    return params.kernel == Kernel::linear ? sq_norm[r] : 1.0;
  };

  std::vector<double> alpha(n, 0.0);
  std::vector<double> u(n, 0.0);  // decision values without bias

  auto in_up = [&](size_t i) { return (y[i] > 0 && alpha[i] < c) || (y[i] < 0 && alpha[i] > 0.0); };
  auto in_low = [&](size_t i) { return (y[i] > 0 && alpha[i] > 0.0) || (y[i] < 0 && alpha[i] < c); };

  const size_t budget = params.max_passes * n;
  size_t iter = 0;
  double m_val = 0.0, big_m_val = 0.0;
  bool converged = false;

  while (iter < budget) {
    size_t i = n, j = n;
    m_val = -std::numeric_limits<double>::infinity();
    big_m_val = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < n; ++k) {
      const double v = static_cast<double>(y[k]) - u[k];
      if (in_up(k) && v > m_val) {
        m_val = v;
        i = k;
      }
      if (in_low(k) && v < big_m_val) {
        big_m_val = v;
        j = k;
      }
    }
    if (i == n || j == n || m_val - big_m_val <= params.tolerance) {
      converged = true;
      break;
    }

    const std::vector<double> ki = cache.row(i, fill_row);
    const std::vector<double>& kj = cache.row(j, fill_row);

    double a = diag(i) + diag(j) - 2.0 * ki[j];
    if (a <= 0.0) a = 1e-12;
    double t = (m_val - big_m_val) / a;
    const double room_i = y[i] > 0 ? c - alpha[i] : alpha[i];
    const double room_j = y[j] > 0 ? alpha[j] : c - alpha[j];
    t = std::min(t, std::min(room_i, room_j));

    alpha[i] += static_cast<double>(y[i]) * t;
    alpha[j] -= static_cast<double>(y[j]) * t;
    alpha[i] = std::clamp(alpha[i], 0.0, c);
    alpha[j] = std::clamp(alpha[j], 0.0, c);
    for (size_t k = 0; k < n; ++k) u[k] += t * (ki[k] - kj[k]);
    ++iter;

    if (trace) {
      double obj = 0.0;
      for (size_t k = 0; k < n; ++k) obj += alpha[k] - 0.5 * alpha[k] * y[k] * u[k];
      trace->objective.push_back(obj);
    }
  }

  // recompute the violating pair bounds at the final iterate for the bias
  m_val = -std::numeric_limits<double>::infinity();
  big_m_val = std::numeric_limits<double>::infinity();
  bool any_up = false, any_low = false;
  for (size_t k = 0; k < n; ++k) {
    const double v = static_cast<double>(y[k]) - u[k];
    if (in_up(k)) {
      any_up = true;
      m_val = std::max(m_val, v);
    }
    if (in_low(k)) {
      any_low = true;
      big_m_val = std::min(big_m_val, v);
    }
  }
  double bias;
  if (any_up && any_low) {
    bias = 0.5 * (m_val + big_m_val);
  } else {
    double sum = 0.0;
    for (size_t k = 0; k < n; ++k) sum += static_cast<double>(y[k]) - u[k];
    bias = sum / static_cast<double>(n);
  }

  if (trace) {
    trace->iterations = iter;
    trace->final_violation = (any_up && any_low) ? m_val - big_m_val : 0.0;
  }

  std::vector<size_t> sv_rows;
  std::vector<double> coef;
  for (size_t k = 0; k < n; ++k) {
    if (alpha[k] > 0.0) {
      sv_rows.push_back(k);
      coef.push_back(alpha[k] * static_cast<double>(y[k]));
    }
  }

  SvmModel model;
  model.kernel = params.kernel;
  model.gamma_value = gamma;
  model.n_features = x.cols();
  model.n_classes = 2;
  BinarySvm machine;
  machine.support_vectors = x.select_rows(sv_rows);
  machine.dual_coefficients = std::move(coef);
  machine.bias = bias;
  machine.converged = converged;
  model.binary.push_back(std::move(machine));
  return model;
}

SvmModel train_svm(const SparseMatrix& x, const std::vector<uint32_t>& y,
                   const SvmParams& params) {
  if (x.rows() == 0) throw Error(errc::empty_training_set, "no rows to train on");
  if (y.size() != x.rows()) {
    throw Error(errc::length_mismatch, "label count does not match row count");
  }
  uint32_t n_classes = 0;
  for (uint32_t label : y) n_classes = std::max(n_classes, label + 1);
  if (n_classes < 2) throw Error(errc::single_class_input, "training labels cover a single class");

  const uint32_t n_machines = n_classes == 2 ? 1 : n_classes;
  SvmModel model;
  std::vector<int> signs(y.size());
  for (uint32_t cls = 0; cls < n_machines; ++cls) {
    for (size_t k = 0; k < y.size(); ++k) signs[k] = y[k] == cls ? 1 : -1;
    SvmModel one = train_binary_svm(x, signs, params);
    if (cls == 0) {
      model.kernel = one.kernel;
      model.gamma_value = one.gamma_value;
      model.n_features = one.n_features;
    }
    model.binary.push_back(std::move(one.binary.front()));
  }
  model.n_classes = n_classes;
  return model;
}

double svm_decision(const SvmModel& model, const BinarySvm& machine, const SparseRow& row) {
  double acc = machine.bias;
  for (size_t s = 0; s < machine.support_vectors.rows(); ++s) {
    acc += machine.dual_coefficients[s] *
           kernel_between(model.kernel, machine.support_vectors.row(s), row, model.gamma_value);
  }
  return acc;
}

std::vector<uint32_t> svm_predict(const SvmModel& model, const SparseMatrix& x) {
  if (x.cols() != model.n_features) {
    throw Error(errc::dimension_mismatch, "feature dimension does not match training");
  }
  std::vector<uint32_t> out(x.rows());
  for (size_t r = 0; r < x.rows(); ++r) {
    const SparseRow row = x.row(r);
    if (model.binary.size() == 1) {
      out[r] = svm_decision(model, model.binary[0], row) >= 0.0 ? 0u : 1u;
      continue;
    }
    uint32_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (uint32_t cls = 0; cls < model.binary.size(); ++cls) {
      const double score = svm_decision(model, model.binary[cls], row);
      if (score > best_score) {
        best_score = score;
        best = cls;
      }
    }
    out[r] = best;
  }
  return out;
}

}  // namespace textclf
