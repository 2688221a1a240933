#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace textclf {

// Read-only view over one row of a SparseMatrix (or a standalone sparse
// vector). Column indices are strictly increasing.
struct SparseRow {
  std::span<const uint32_t> cols;
  std::span<const double> vals;
  size_t dim = 0;

  size_t nnz() const { return cols.size(); }
  double value_at(uint32_t col) const;
  double squared_norm() const;
};

double dot(const SparseRow& a, const SparseRow& b);
double squared_distance(const SparseRow& a, const SparseRow& b);

// Row-compressed sparse real matrix. Stored values are non-zero and column
// indices are strictly increasing within each row.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(size_t rows, size_t cols, std::vector<size_t> offsets,
               std::vector<uint32_t> col_indices, std::vector<double> values);

  // Builds from per-row (column, value) pairs. Pairs within a row may be
  // unordered; duplicates are summed; zero results are dropped.
  static SparseMatrix from_rows(
      size_t cols, const std::vector<std::vector<std::pair<uint32_t, double>>>& rows);
  static SparseMatrix from_dense(const std::vector<std::vector<double>>& dense);

  std::vector<std::vector<double>> to_dense() const;

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t nnz() const { return values_.size(); }

  SparseRow row(size_t i) const;
  SparseMatrix select_rows(std::span<const size_t> indices) const;

  const std::vector<size_t>& offsets() const { return offsets_; }
  const std::vector<uint32_t>& col_indices() const { return col_indices_; }
  const std::vector<double>& values() const { return values_; }

  bool operator==(const SparseMatrix& other) const = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<size_t> offsets_{0};
  std::vector<uint32_t> col_indices_;
  std::vector<double> values_;
};

}  // namespace textclf
