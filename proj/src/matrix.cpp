#include "sagif/matrix.hpp"

#include <algorithm>
#include <cstddef>

#include "sagif/errors.hpp"

namespace sagif {

double SparseMatrix::get(int r, int c) const {
  auto first = indices.begin() + offsets[r];
  auto last = indices.begin() + offsets[r + 1];
  auto it = std::lower_bound(first, last, c);
  if (it == last || *it != c) return 0.0;
  return values[static_cast<std::size_t>(it - indices.begin())];
}

SparseMatrix SparseMatrix::from_triplets(int rows, int cols,
                                         std::vector<std::tuple<int, int, double>> triplets) {
  for (const auto& [r, c, v] : triplets) {
    (void)v;
    if (r < 0 || r >= rows || c < 0 || c >= cols)
      throw ValidationError("triplet index out of range");
  }
  std::sort(triplets.begin(), triplets.end(),
            [](const auto& a, const auto& b) {
              return std::tie(std::get<0>(a), std::get<1>(a)) <
                     std::tie(std::get<0>(b), std::get<1>(b));
            });
  SparseMatrix m(rows, cols);
  m.indices.reserve(triplets.size());
  m.values.reserve(triplets.size());
  std::size_t i = 0;
  for (int r = 0; r < rows; ++r) {
    while (i < triplets.size() && std::get<0>(triplets[i]) == r) {
      int c = std::get<1>(triplets[i]);
      double v = std::get<2>(triplets[i]);
      ++i;
      while (i < triplets.size() && std::get<0>(triplets[i]) == r &&
             std::get<1>(triplets[i]) == c) {
        v += std::get<2>(triplets[i]);
        ++i;
      }
      m.indices.push_back(c);
      m.values.push_back(v);
    }
    m.offsets[r + 1] = static_cast<int>(m.indices.size());
  }
  return m;
}

SparseMatrix SparseMatrix::identity(int n) {
  SparseMatrix m(n, n);
  m.indices.resize(n);
  m.values.assign(n, 1.0);
  for (int i = 0; i < n; ++i) {
    m.indices[i] = i;
    m.offsets[i + 1] = i + 1;
  }
  return m;
}

void SparseMatrix::check_invariants() const {
  if (static_cast<int>(offsets.size()) != rows + 1)
    throw ValidationError("sparse matrix: bad offset array size");
  if (offsets.front() != 0 || offsets.back() != nnz())
    throw ValidationError("sparse matrix: offsets do not cover value array");
  for (int r = 0; r < rows; ++r) {
    if (offsets[r + 1] < offsets[r])
      throw ValidationError("sparse matrix: offsets not monotone");
    for (int j = offsets[r]; j < offsets[r + 1]; ++j) {
      if (indices[j] < 0 || indices[j] >= cols)
        throw ValidationError("sparse matrix: column index out of range");
      if (j > offsets[r] && indices[j] <= indices[j - 1])
        throw ValidationError("sparse matrix: column indices not strictly increasing");
    }
  }
}

bool SparseMatrix::is_symmetric() const {
  if (rows != cols) return false;
  for (int r = 0; r < rows; ++r)
    for (int j = offsets[r]; j < offsets[r + 1]; ++j)
      if (get(indices[j], r) != values[j]) return false;
  return true;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.rows) throw ValidationError("matmul: dimension mismatch");
  DenseMatrix out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    double* orow = out.row(i);
    for (int k = 0; k < a.cols; ++k) {
      double av = arow[k];
      if (av == 0.0) continue;
      const double* brow = b.row(k);
      for (int j = 0; j < b.cols; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows != b.rows) throw ValidationError("matmul_tn: dimension mismatch");
  DenseMatrix out(a.cols, b.cols);
  for (int k = 0; k < a.rows; ++k) {
    const double* arow = a.row(k);
    const double* brow = b.row(k);
    for (int i = 0; i < a.cols; ++i) {
      double av = arow[i];
      if (av == 0.0) continue;
      double* orow = out.row(i);
      for (int j = 0; j < b.cols; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.cols) throw ValidationError("matmul_nt: dimension mismatch");
  DenseMatrix out(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    double* orow = out.row(i);
    for (int j = 0; j < b.rows; ++j) {
      const double* brow = b.row(j);
      double acc = 0.0;
      for (int k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
      orow[j] = acc;
    }
  }
  return out;
}

DenseMatrix sparse_dense_multiply(const SparseMatrix& s, const DenseMatrix& d) {
  if (s.cols != d.rows) throw ValidationError("sparse_dense_multiply: dimension mismatch");
  DenseMatrix out(s.rows, d.cols);
  for (int i = 0; i < s.rows; ++i) {
    double* orow = out.row(i);
    for (int j = s.offsets[i]; j < s.offsets[i + 1]; ++j) {
      double sv = s.values[j];
      const double* drow = d.row(s.indices[j]);
      for (int c = 0; c < d.cols; ++c) orow[c] += sv * drow[c];
    }
  }
  return out;
}

SparseMatrix sparse_add(double alpha, const SparseMatrix& a, double beta, const SparseMatrix& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw ValidationError("sparse_add: dimension mismatch");
  SparseMatrix out(a.rows, a.cols);
  out.indices.reserve(a.indices.size() + b.indices.size());
  out.values.reserve(a.indices.size() + b.indices.size());
  for (int r = 0; r < a.rows; ++r) {
    int ia = a.offsets[r], ib = b.offsets[r];
    while (ia < a.offsets[r + 1] || ib < b.offsets[r + 1]) {
      int ca = ia < a.offsets[r + 1] ? a.indices[ia] : a.cols;
      int cb = ib < b.offsets[r + 1] ? b.indices[ib] : b.cols;
      if (ca < cb) {
        out.indices.push_back(ca);
        out.values.push_back(alpha * a.values[ia++]);
      } else if (cb < ca) {
        out.indices.push_back(cb);
        out.values.push_back(beta * b.values[ib++]);
      } else {
        out.indices.push_back(ca);
        out.values.push_back(alpha * a.values[ia++] + beta * b.values[ib++]);
      }
    }
    out.offsets[r + 1] = static_cast<int>(out.indices.size());
  }
  return out;
}

DenseMatrix hconcat(const DenseMatrix& a, const DenseMatrix& b) {
  if (b.cols == 0) {
    DenseMatrix out = a;
    return out;
  }
  if (a.cols == 0) return b;
  if (a.rows != b.rows) throw ValidationError("hconcat: row count mismatch");
  DenseMatrix out(a.rows, a.cols + b.cols);
  for (int i = 0; i < a.rows; ++i) {
    std::copy(a.row(i), a.row(i) + a.cols, out.row(i));
    std::copy(b.row(i), b.row(i) + b.cols, out.row(i) + a.cols);
  }
  return out;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix out(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) out.at(j, i) = a.at(i, j);
  return out;
}

std::vector<double> column_sums(const DenseMatrix& a) {
  std::vector<double> s(a.cols, 0.0);
  for (int i = 0; i < a.rows; ++i) {
    const double* row = a.row(i);
    for (int j = 0; j < a.cols; ++j) s[j] += row[j];
  }
  return s;
}

void add_row_vector(DenseMatrix& a, const DenseMatrix& bias) {
  if (bias.rows != 1 || bias.cols != a.cols)
    throw ValidationError("add_row_vector: bias shape mismatch");
  for (int i = 0; i < a.rows; ++i) {
    double* row = a.row(i);
    for (int j = 0; j < a.cols; ++j) row[j] += bias.data[j];
  }
}

DenseMatrix to_dense(const SparseMatrix& s) {
  DenseMatrix out(s.rows, s.cols);
  for (int r = 0; r < s.rows; ++r)
    for (int j = s.offsets[r]; j < s.offsets[r + 1]; ++j)
      out.at(r, s.indices[j]) = s.values[j];
  return out;
}

}  // namespace sagif
