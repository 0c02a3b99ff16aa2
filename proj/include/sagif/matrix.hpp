#pragma once

#include <cstdint>
#include <tuple>
#include <vector>

namespace sagif {

/// Row-major dense real matrix.
struct DenseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

  const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }
  double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }

  bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }
};

/// Row-compressed sparse real matrix. Column indices are strictly
/// increasing within each row.
struct SparseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> offsets;  // size rows + 1
  std::vector<int> indices;
  std::vector<double> values;

  SparseMatrix() = default;
  SparseMatrix(int r, int c) : rows(r), cols(c), offsets(r + 1, 0) {}

  int nnz() const { return static_cast<int>(indices.size()); }
  int row_nnz(int r) const { return offsets[r + 1] - offsets[r]; }

  double get(int r, int c) const;

  /// Builds from (row, col, value) triplets; duplicates are summed.
  static SparseMatrix from_triplets(int rows, int cols,
                                    std::vector<std::tuple<int, int, double>> triplets);
  static SparseMatrix identity(int n);

  void check_invariants() const;  // throws ValidationError
  bool is_symmetric() const;
};

// Dense products. matmul_tn computes a^T * b, matmul_nt computes a * b^T.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);

/// Sparse-dense product with fixed (ascending column index) accumulation
/// order per row, so repeated runs are bit-identical.
DenseMatrix sparse_dense_multiply(const SparseMatrix& s, const DenseMatrix& d);

/// alpha * a + beta * b, entrywise over the merged sparsity patterns.
SparseMatrix sparse_add(double alpha, const SparseMatrix& a, double beta, const SparseMatrix& b);

DenseMatrix hconcat(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);
std::vector<double> column_sums(const DenseMatrix& a);

/// Adds a row-broadcast bias (1 x cols) in place.
void add_row_vector(DenseMatrix& a, const DenseMatrix& bias);

DenseMatrix to_dense(const SparseMatrix& s);

}  // namespace sagif
