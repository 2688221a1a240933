#include "textclf/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "textclf/error.hpp"

namespace textclf {

double SparseRow::value_at(uint32_t col) const {
  const auto it = std::lower_bound(cols.begin(), cols.end(), col);
  if (it == cols.end() || *it != col) return 0.0;
  return vals[static_cast<size_t>(it - cols.begin())];
}

double SparseRow::squared_norm() const {
  double s = 0.0;
  for (double v : vals) s += v * v;
  return s;
}

double dot(const SparseRow& a, const SparseRow& b) {
  double s = 0.0;
  size_t i = 0, j = 0;
  while (i < a.cols.size() && j < b.cols.size()) {
    if (a.cols[i] == b.cols[j]) {
      s += a.vals[i] * b.vals[j];
      ++i;
      ++j;
    } else if (a.cols[i] < b.cols[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return s;
}

double squared_distance(const SparseRow& a, const SparseRow& b) {
  const double d2 = a.squared_norm() + b.squared_norm() - 2.0 * dot(a, b);
  return d2 > 0.0 ? d2 : 0.0;
}

SparseMatrix::SparseMatrix(size_t rows, size_t cols, std::vector<size_t> offsets,
                           std::vector<uint32_t> col_indices, std::vector<double> values)
    : rows_(rows), cols_(cols), offsets_(std::move(offsets)),
      col_indices_(std::move(col_indices)), values_(std::move(values)) {
  if (offsets_.size() != rows_ + 1 || offsets_.front() != 0 ||
      offsets_.back() != col_indices_.size() || col_indices_.size() != values_.size()) {
    throw Error(errc::shape_mismatch, "inconsistent CSR arrays");
  }
  for (size_t r = 0; r < rows_; ++r) {
    if (offsets_[r] > offsets_[r + 1]) {
      throw Error(errc::shape_mismatch, "row offsets must be non-decreasing");
    }
    for (size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) {
      if (col_indices_[k] >= cols_) {
        throw Error(errc::shape_mismatch, "column index out of range");
      }
      if (k > offsets_[r] && col_indices_[k] <= col_indices_[k - 1]) {
        throw Error(errc::shape_mismatch, "column indices must be strictly increasing");
      }
      if (values_[k] == 0.0) {
        throw Error(errc::shape_mismatch, "stored values must be non-zero");
      }
    }
  }
}

SparseMatrix SparseMatrix::from_rows(
    size_t cols, const std::vector<std::vector<std::pair<uint32_t, double>>>& rows) {
  std::vector<size_t> offsets;
  offsets.reserve(rows.size() + 1);
  offsets.push_back(0);
  std::vector<uint32_t> col_indices;
  std::vector<double> values;
  std::map<uint32_t, double> merged;
  for (const auto& row : rows) {
    merged.clear();
    for (const auto& [c, v] : row) merged[c] += v;
    for (const auto& [c, v] : merged) {
      if (v == 0.0) continue;
      col_indices.push_back(c);
      values.push_back(v);
    }
    offsets.push_back(col_indices.size());
  }
  return SparseMatrix(rows.size(), cols, std::move(offsets), std::move(col_indices),
                      std::move(values));
}

SparseMatrix SparseMatrix::from_dense(const std::vector<std::vector<double>>& dense) {
  const size_t cols = dense.empty() ? 0 : dense.front().size();
  std::vector<std::vector<std::pair<uint32_t, double>>> rows(dense.size());
  for (size_t r = 0; r < dense.size(); ++r) {
    if (dense[r].size() != cols) {
      throw Error(errc::shape_mismatch, "ragged dense input");
    }
    for (size_t c = 0; c < cols; ++c) {
      if (dense[r][c] != 0.0) rows[r].emplace_back(static_cast<uint32_t>(c), dense[r][c]);
    }
  }
  return from_rows(cols, rows);
}

std::vector<std::vector<double>> SparseMatrix::to_dense() const {
  std::vector<std::vector<double>> dense(rows_, std::vector<double>(cols_, 0.0));
  for (size_t r = 0; r < rows_; ++r) {
    for (size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) {
      dense[r][col_indices_[k]] = values_[k];
    }
  }
  return dense;
}

SparseRow SparseMatrix::row(size_t i) const {
  const size_t begin = offsets_[i];
  const size_t count = offsets_[i + 1] - begin;
  return SparseRow{std::span(col_indices_).subspan(begin, count),
                   std::span(values_).subspan(begin, count), cols_};
}

SparseMatrix SparseMatrix::select_rows(std::span<const size_t> indices) const {
  std::vector<size_t> offsets;
  offsets.reserve(indices.size() + 1);
  offsets.push_back(0);
  std::vector<uint32_t> col_indices;
  std::vector<double> values;
  for (size_t i : indices) {
    for (size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
      col_indices.push_back(col_indices_[k]);
      values.push_back(values_[k]);
    }
    offsets.push_back(col_indices.size());
  }
  return SparseMatrix(indices.size(), cols_, std::move(offsets), std::move(col_indices),
                      std::move(values));
}

}  // namespace textclf
