#include "sagif/graph.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "sagif/errors.hpp"

namespace sagif {

void GraphBundle::validate() const {
  adjacency.check_invariants();
  if (adjacency.rows != n || adjacency.cols != n)
    throw ValidationError("bundle: adjacency shape does not match n");
  if (!adjacency.is_symmetric()) throw ValidationError("bundle: adjacency not symmetric");
  for (int r = 0; r < n; ++r)
    for (int j = adjacency.offsets[r]; j < adjacency.offsets[r + 1]; ++j) {
      if (adjacency.indices[j] == r) throw ValidationError("bundle: self-loop in adjacency");
      if (adjacency.values[j] != 1.0) throw ValidationError("bundle: adjacency not binary");
    }
  if (adjacency.nnz() != 2 * m) throw ValidationError("bundle: edge count mismatch");
  if (features.rows != n) throw ValidationError("bundle: feature row count mismatch");
  if (features.cols <= 0) throw ValidationError("bundle: empty feature matrix");
  if (static_cast<int>(labels.size()) != n) throw ValidationError("bundle: label count mismatch");
  if (num_classes < 2) throw ValidationError("bundle: need at least two classes");
  for (int y : labels)
    if (y < 0 || y >= num_classes) throw ValidationError("bundle: label out of range");
  std::unordered_set<int> seen;
  for (const auto* split : {&train_idx, &val_idx, &test_idx})
    for (int v : *split) {
      if (v < 0 || v >= n) throw ValidationError("bundle: split index out of range");
      if (!seen.insert(v).second) throw ValidationError("bundle: splits not disjoint");
    }
}

void OracleSimilarity::check_invariants() const {
  if (static_cast<int>(neighbors.size()) != n * k || static_cast<int>(scores.size()) != n * k)
    throw ValidationError("oracle: array size mismatch");
  for (int i = 0; i < n; ++i) {
    std::unordered_set<int> seen;
    for (int j = 0; j < k; ++j) {
      int nb = neighbor(i, j);
      if (nb < 0 || nb >= n || nb == i) throw ValidationError("oracle: bad neighbor index");
      if (!seen.insert(nb).second) throw ValidationError("oracle: duplicate neighbor");
      if (j > 0 && score(i, j) > score(i, j - 1))
        throw ValidationError("oracle: scores not non-increasing");
    }
  }
}

SparseMatrix normalize_adjacency(const SparseMatrix& adjacency, bool add_self_loops) {
  if (adjacency.rows != adjacency.cols)
    throw ValidationError("normalize_adjacency: matrix not square");
  const int n = adjacency.rows;
  SparseMatrix a_hat =
      add_self_loops ? sparse_add(1.0, adjacency, 1.0, SparseMatrix::identity(n)) : adjacency;
  std::vector<double> inv_sqrt_deg(n, 0.0);
  for (int r = 0; r < n; ++r) {
    double deg = 0.0;
    for (int j = a_hat.offsets[r]; j < a_hat.offsets[r + 1]; ++j) deg += a_hat.values[j];
    inv_sqrt_deg[r] = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
  }
  SparseMatrix out = a_hat;
  for (int r = 0; r < n; ++r)
    for (int j = out.offsets[r]; j < out.offsets[r + 1]; ++j)
      out.values[j] *= inv_sqrt_deg[r] * inv_sqrt_deg[out.indices[j]];
  return out;
}

namespace {

// Sparse row views shared by the dense and sparse top-k paths.
struct RowView {
  std::vector<int> row_start;
  std::vector<int> idx;
  std::vector<double> val;
  std::vector<double> norm;
  int n = 0;

  double dot(int a, int b) const {
    int ia = row_start[a], ea = row_start[a + 1];
    int ib = row_start[b], eb = row_start[b + 1];
    double acc = 0.0;
    while (ia < ea && ib < eb) {
      if (idx[ia] < idx[ib])
        ++ia;
      else if (idx[ib] < idx[ia])
        ++ib;
      else
        acc += val[ia++] * val[ib++];
    }
    return acc;
  }
};

RowView rows_from_dense(const DenseMatrix& m) {
  RowView rv;
  rv.n = m.rows;
  rv.row_start.assign(m.rows + 1, 0);
  for (int i = 0; i < m.rows; ++i) {
    const double* row = m.row(i);
    double sq = 0.0;
    for (int j = 0; j < m.cols; ++j) {
      if (row[j] != 0.0) {
        rv.idx.push_back(j);
        rv.val.push_back(row[j]);
        sq += row[j] * row[j];
      }
    }
    rv.row_start[i + 1] = static_cast<int>(rv.idx.size());
    rv.norm.push_back(std::sqrt(sq));
  }
  return rv;
}

RowView rows_from_sparse(const SparseMatrix& m) {
  RowView rv;
  rv.n = m.rows;
  rv.row_start = m.offsets;
  rv.idx = m.indices;
  rv.val = m.values;
  rv.norm.resize(m.rows);
  for (int i = 0; i < m.rows; ++i) {
    double sq = 0.0;
    for (int j = m.offsets[i]; j < m.offsets[i + 1]; ++j) sq += m.values[j] * m.values[j];
    rv.norm[i] = std::sqrt(sq);
  }
  return rv;
}

OracleSimilarity topk_from_rows(const RowView& rv, int k, bool exclude_self) {
  const int n = rv.n;
  if (k >= n) throw ValidationError("row_cosine_topk: k must be smaller than the row count");
  if (k < 1) throw ValidationError("row_cosine_topk: k must be positive");
  OracleSimilarity out;
  out.n = n;
  out.k = k;
  out.neighbors.resize(static_cast<std::size_t>(n) * k);
  out.scores.resize(static_cast<std::size_t>(n) * k);
  std::vector<std::pair<double, int>> cand;
  cand.reserve(n);
  auto better = [](const std::pair<double, int>& a, const std::pair<double, int>& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  };
  for (int i = 0; i < n; ++i) {
    cand.clear();
    for (int j = 0; j < n; ++j) {
      if (exclude_self && j == i) continue;
      double c = 0.0;
      if (rv.norm[i] > 0.0 && rv.norm[j] > 0.0) c = rv.dot(i, j) / (rv.norm[i] * rv.norm[j]);
      cand.emplace_back(c, j);
    }
    std::nth_element(cand.begin(), cand.begin() + (k - 1), cand.end(), better);
    std::sort(cand.begin(), cand.begin() + k, better);
    for (int j = 0; j < k; ++j) {
      out.neighbors[static_cast<std::size_t>(i) * k + j] = cand[j].second;
      out.scores[static_cast<std::size_t>(i) * k + j] = cand[j].first;
    }
  }
  return out;
}

}  // namespace

OracleSimilarity row_cosine_topk(const DenseMatrix& mat, int k, bool exclude_self) {
  return topk_from_rows(rows_from_dense(mat), k, exclude_self);
}

OracleSimilarity row_cosine_topk(const SparseMatrix& mat, int k, bool exclude_self) {
  return topk_from_rows(rows_from_sparse(mat), k, exclude_self);
}

double row_cosine(const DenseMatrix& mat, int i, int j) {
  const double* a = mat.row(i);
  const double* b = mat.row(j);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (int c = 0; c < mat.cols; ++c) {
    dot += a[c] * b[c];
    na += a[c] * a[c];
    nb += b[c] * b[c];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace sagif
