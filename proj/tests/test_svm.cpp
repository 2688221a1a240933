#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "oracles.hpp"
#include "textclf/error.hpp"
#include "textclf/fixtures.hpp"
#include "textclf/rng.hpp"
#include "textclf/sparse.hpp"
#include "textclf/svm.hpp"

using namespace textclf;
using testutil::expect_error;

namespace {

std::vector<int> signed_labels(const std::vector<uint32_t>& y) {
  std::vector<int> out(y.size());
  for (size_t i = 0; i < y.size(); ++i) out[i] = y[i] == 0 ? 1 : -1;
  return out;
}

double training_accuracy(const SvmModel& model, const SparseMatrix& x,
                         const std::vector<uint32_t>& y) {
  const std::vector<uint32_t> predicted = svm_predict(model, x);
  size_t correct = 0;
  for (size_t i = 0; i < y.size(); ++i) correct += predicted[i] == y[i];
  return static_cast<double>(correct) / static_cast<double>(y.size());
}

// Recovers per-row alpha*y by matching training rows against the stored
// support vectors; rows that never match carry alpha = 0.
std::vector<double> recover_duals(const SvmModel& model, const SparseMatrix& x) {
  const BinarySvm& machine = model.binary.front();
  std::vector<double> duals(x.rows(), 0.0);
  std::vector<bool> used(machine.support_vectors.rows(), false);
  for (size_t i = 0; i < x.rows(); ++i) {
    const SparseRow row = x.row(i);
    for (size_t s = 0; s < machine.support_vectors.rows(); ++s) {
      if (used[s]) continue;
      const SparseRow sv = machine.support_vectors.row(s);
      if (std::equal(row.cols.begin(), row.cols.end(), sv.cols.begin(), sv.cols.end()) &&
          std::equal(row.vals.begin(), row.vals.end(), sv.vals.begin(), sv.vals.end())) {
        duals[i] = machine.dual_coefficients[s];
        used[s] = true;
        break;
      }
    }
  }
  return duals;
}

// KKT residuals of the trained binary machine over its training set.
void check_kkt(const SvmModel& model, const SparseMatrix& x, const std::vector<int>& y,
               const SvmParams& params) {
  const BinarySvm& machine = model.binary.front();
  REQUIRE(machine.converged);
  const std::vector<double> duals = recover_duals(model, x);

  double dual_sum = 0.0;
  for (size_t i = 0; i < x.rows(); ++i) {
    const double alpha = duals[i] * y[i];  // dual coefficient is alpha*y
    CHECK(alpha >= -1e-12);
    CHECK(alpha <= params.c + 1e-12);
    dual_sum += duals[i];

    const double margin = y[i] * svm_decision(model, machine, x.row(i));
    const double slack = params.tolerance + 1e-9;
    if (alpha <= 1e-12) {
      CHECK(margin >= 1.0 - slack);
    } else if (alpha >= params.c - 1e-12) {
      CHECK(margin <= 1.0 + slack);
    } else {
      CHECK(std::fabs(margin - 1.0) <= slack);
    }
  }
  CHECK(std::fabs(dual_sum) <= 1e-8);
}

}  // namespace

TEST_SUITE("svm") {

TEST_CASE("scale_gamma inverts feature count times variance") {
  const SparseMatrix x = SparseMatrix::from_dense({{0.0, 1.0}, {1.0, 0.0}});
  CHECK(scale_gamma(x) == doctest::Approx(2.0).epsilon(1e-12));

  // A constant matrix degenerates to 1/n_cols.
  const SparseMatrix flat = SparseMatrix::from_dense({{3.0, 3.0, 3.0}, {3.0, 3.0, 3.0}});
  CHECK(scale_gamma(flat) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  expect_error(errc::empty_matrix, [] { scale_gamma(SparseMatrix{}); });
}

TEST_CASE("scale_gamma matches the dense variance oracle") {
  Rng rng(21);
  std::vector<std::vector<double>> dense(10, std::vector<double>(5, 0.0));
  for (auto& row : dense) {
    for (double& v : row) {
      v = rng.bernoulli(0.3) ? 0.0 : rng.next_double() * 4.0 - 2.0;
    }
  }
  const double var = oracle::dense_variance(dense);
  const double expected = 1.0 / (5.0 * var);
  CHECK(scale_gamma(SparseMatrix::from_dense(dense)) ==
        doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("rbf_kernel evaluates the gaussian") {
  const SparseMatrix m = SparseMatrix::from_dense({{0.0, 0.0}, {1.0, 1.0}, {0.5, -0.25}});
  CHECK(rbf_kernel(m.row(0), m.row(0), 3.7) == 1.0);
  CHECK(rbf_kernel(m.row(0), m.row(1), 0.5) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(rbf_kernel(m.row(1), m.row(2), 1.3) ==
        doctest::Approx(rbf_kernel(m.row(2), m.row(1), 1.3)).epsilon(1e-15));

  const SparseMatrix other = SparseMatrix::from_dense({{1.0, 2.0, 3.0}});
  expect_error(errc::dimension_mismatch, [&] { rbf_kernel(m.row(0), other.row(0), 1.0); });
}

TEST_CASE("kernel row cache evicts least recently used rows") {
  // Each cached row of 4 doubles is tiny, so force a small capacity by hand.
  KernelRowCache cache(1000000, 1);
  CHECK(cache.capacity_rows() >= 1);

  size_t fills = 0;
  auto fill = [&](size_t i, std::vector<double>& row) {
    ++fills;
    row.assign(4, static_cast<double>(i));
  };
  (void)cache.row(1, fill);
  (void)cache.row(1, fill);
  CHECK(fills == 1);
  CHECK(cache.hits() == 1);
  CHECK(cache.misses() == 1);
}

TEST_CASE("train_binary_svm places the midpoint on the margin") {
  const SparseMatrix x = SparseMatrix::from_dense({{0.0, 0.0}, {2.0, 2.0}});
  const std::vector<int> y{-1, 1};
  SvmParams params;
  params.kernel = Kernel::linear;
  params.tolerance = 1e-6;
  const SvmModel model = train_binary_svm(x, y, params);

  const SparseMatrix probe = SparseMatrix::from_dense({{1.0, 1.0}});
  const double decision = svm_decision(model, model.binary.front(), probe.row(0));
  CHECK(std::fabs(decision) <= 1e-6);
}

TEST_CASE("train_binary_svm rejects single-class labels") {
  const SparseMatrix x = SparseMatrix::from_dense({{0.0}, {1.0}});
  expect_error(errc::single_class_input,
               [&] { train_binary_svm(x, std::vector<int>{1, 1}, SvmParams{}); });
  expect_error(errc::config_invalid,
               [&] { train_binary_svm(x, std::vector<int>{1, 0}, SvmParams{}); });
}

TEST_CASE("separable blobs train to full accuracy with clean kkt state") {
  const NumericDataset data = make_blobs(20, 1);
  SvmParams params;
  params.kernel = Kernel::linear;
  const SvmModel model = train_svm(data.x, data.y, params);
  CHECK(training_accuracy(model, data.x, data.y) == 1.0);

  const std::vector<uint32_t> predicted = svm_predict(model, data.x);
  CHECK(predicted == data.y);

  SmoTrace trace;
  const SvmModel binary = train_binary_svm(data.x, signed_labels(data.y), params, &trace);
  check_kkt(binary, data.x, signed_labels(data.y), params);

  // The smo pair updates never lower the dual objective.
  for (size_t i = 1; i < trace.objective.size(); ++i) {
    CHECK(trace.objective[i] >= trace.objective[i - 1] - 1e-9);
  }
  CHECK(trace.iterations > 0);
}

TEST_CASE("concentric circles need the rbf kernel") {
  const NumericDataset data = make_circles(50, 2);
  SvmParams params;  // rbf + scale gamma defaults
  const SvmModel model = train_svm(data.x, data.y, params);
  CHECK(model.gamma_value == doctest::Approx(scale_gamma(data.x)).epsilon(1e-12));
  CHECK(training_accuracy(model, data.x, data.y) >= 0.95);

  SmoTrace trace;
  const SvmModel binary = train_binary_svm(data.x, signed_labels(data.y), params, &trace);
  check_kkt(binary, data.x, signed_labels(data.y), params);
}

TEST_CASE("an exhausted iteration budget is flagged not hidden") {
  const NumericDataset data = make_circles(60, 3);
  SvmParams params;
  params.tolerance = 1e-12;
  params.max_passes = 1;
  const SvmModel model = train_binary_svm(data.x, signed_labels(data.y), params);
  CHECK_FALSE(model.binary.front().converged);
  CHECK_FALSE(model.all_converged());
  // The best iterate is still usable for prediction.
  CHECK(svm_predict(model, data.x).size() == data.y.size());
}

TEST_CASE("svm_predict takes the sign of the binary decision") {
  const NumericDataset data = make_blobs(20, 4);
  SvmParams params;
  params.kernel = Kernel::linear;
  const SvmModel model = train_svm(data.x, data.y, params);
  const BinarySvm& machine = model.binary.front();

  const std::vector<uint32_t> predicted = svm_predict(model, data.x);
  for (size_t i = 0; i < data.x.rows(); ++i) {
    const double decision = svm_decision(model, machine, data.x.row(i));
    CHECK(predicted[i] == (decision >= 0.0 ? 0u : 1u));
  }
}

TEST_CASE("exact one-vs-rest ties resolve to the lowest class") {
  SvmModel model;
  model.kernel = Kernel::linear;
  model.n_features = 1;
  model.n_classes = 3;
  model.binary.resize(3);
  model.binary[0].bias = 0.25;
  model.binary[1].bias = 0.25;  // tie with class 0
  model.binary[2].bias = -1.0;

  const SparseMatrix probe = SparseMatrix::from_dense({{0.0}});
  CHECK(svm_predict(model, probe) == std::vector<uint32_t>{0});

  const SparseMatrix wide = SparseMatrix::from_dense({{0.0, 0.0}});
  expect_error(errc::dimension_mismatch, [&] { svm_predict(model, wide); });
}

TEST_CASE("one-vs-rest separates three clouds") {
  std::vector<std::vector<double>> dense;
  std::vector<uint32_t> y;
  Rng rng(9);
  const double centers[3][2] = {{0.0, 0.0}, {10.0, 10.0}, {20.0, 0.0}};
  for (uint32_t c = 0; c < 3; ++c) {
    for (size_t i = 0; i < 10; ++i) {
      dense.push_back({centers[c][0] + rng.next_double() - 0.5,
                       centers[c][1] + rng.next_double() - 0.5});
      y.push_back(c);
    }
  }
  const SparseMatrix x = SparseMatrix::from_dense(dense);
  SvmParams params;
  params.kernel = Kernel::linear;
  const SvmModel model = train_svm(x, y, params);
  REQUIRE(model.binary.size() == 3);
  CHECK(model.n_classes == 3);
  CHECK(training_accuracy(model, x, y) == 1.0);
}

TEST_CASE("training is invariant under row permutation") {
  const NumericDataset data = make_blobs(24, 6);
  SvmParams params;
  params.kernel = Kernel::linear;
  params.tolerance = 1e-8;  // converge tightly so both orders land together
  const SvmModel forward = train_svm(data.x, data.y, params);

  std::vector<size_t> order(data.x.rows());
  for (size_t i = 0; i < order.size(); ++i) order[i] = order.size() - 1 - i;
  const SparseMatrix reversed_x = data.x.select_rows(order);
  std::vector<uint32_t> reversed_y(data.y.size());
  for (size_t i = 0; i < order.size(); ++i) reversed_y[i] = data.y[order[i]];
  const SvmModel backward = train_svm(reversed_x, reversed_y, params);

  for (size_t i = 0; i < data.x.rows(); ++i) {
    const double a = svm_decision(forward, forward.binary.front(), data.x.row(i));
    const double b = svm_decision(backward, backward.binary.front(), data.x.row(i));
    CHECK(std::fabs(a - b) <= 1e-6);
  }
}

}  // TEST_SUITE
