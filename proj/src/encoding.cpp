#include "sagif/encoding.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "sagif/errors.hpp"
#include "sagif/graph.hpp"

namespace sagif {

namespace {

constexpr int kDenseSolverLimit = 4096;
constexpr double kTrivialEigenvalueTol = 1e-8;

int count_components(const SparseMatrix& a) {
  const int n = a.rows;
  std::vector<int> comp(n, -1);
  std::vector<int> stack;
  int count = 0;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = count;
    stack.push_back(s);
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int j = a.offsets[u]; j < a.offsets[u + 1]; ++j) {
        int v = a.indices[j];
        if (comp[v] < 0) {
          comp[v] = count;
          stack.push_back(v);
        }
      }
    }
    ++count;
  }
  return count;
}

// L = I - D^{-1/2} A D^{-1/2}, with diagonal 0 for isolated nodes so each
// connected component contributes exactly one zero eigenvalue.
SparseMatrix normalized_laplacian(const SparseMatrix& a_k) {
  const int n = a_k.rows;
  SparseMatrix norm = normalize_adjacency(a_k, false);
  std::vector<std::tuple<int, int, double>> diag;
  for (int r = 0; r < n; ++r)
    if (a_k.offsets[r + 1] > a_k.offsets[r]) diag.emplace_back(r, r, 1.0);
  SparseMatrix eye = SparseMatrix::from_triplets(n, n, std::move(diag));
  return sparse_add(1.0, eye, -1.0, norm);
}

void fix_sign(std::vector<double>& v) {
  int arg = 0;
  for (int r = 1; r < static_cast<int>(v.size()); ++r)
    if (std::abs(v[r]) > std::abs(v[arg])) arg = r;
  if (v[arg] < 0.0)
    for (double& x : v) x = -x;
}

// Orders equal-eigenvalue vectors lexicographically for determinism.
void sort_tied_eigenpairs(std::vector<double>& vals, std::vector<std::vector<double>>& vecs) {
  std::vector<int> order(vals.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (std::abs(vals[a] - vals[b]) > kTrivialEigenvalueTol) return vals[a] < vals[b];
    return vecs[a] < vecs[b];
  });
  std::vector<double> sv;
  std::vector<std::vector<double>> svec;
  for (int i : order) {
    sv.push_back(vals[i]);
    svec.push_back(std::move(vecs[i]));
  }
  vals = std::move(sv);
  vecs = std::move(svec);
}

}  // namespace

namespace detail {

void smallest_eigenpairs_lanczos(const SparseMatrix& l, int count,
                                 std::vector<double>& eigenvalues, DenseMatrix& eigenvectors) {
  const int n = l.rows;
  const int max_iter = std::min(n, 5000);
  // Deterministic starting vector.
  auto splitmix = [](std::uint64_t& s) {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t state = 0x5a17f00dULL;
  std::vector<std::vector<double>> basis;
  std::vector<double> alpha, beta;
  std::vector<double> v(n);
  double nrm = 0.0;
  for (int i = 0; i < n; ++i) {
    v[i] = static_cast<double>(splitmix(state) >> 11) * (1.0 / 9007199254740992.0) - 0.5;
    nrm += v[i] * v[i];
  }
  nrm = std::sqrt(nrm);
  for (double& x : v) x /= nrm;

  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    std::fill(y.begin(), y.end(), 0.0);
    for (int r = 0; r < n; ++r) {
      double acc = 0.0;
      for (int j = l.offsets[r]; j < l.offsets[r + 1]; ++j) acc += l.values[j] * x[l.indices[j]];
      y[r] = acc;
    }
  };

  std::vector<double> w(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri_solver;
  for (int it = 0; it < max_iter; ++it) {
    basis.push_back(v);
    apply(v, w);
    double a = std::inner_product(w.begin(), w.end(), v.begin(), 0.0);
    alpha.push_back(a);
    // Full reorthogonalization against all previous basis vectors.
    for (const auto& q : basis) {
      double proj = std::inner_product(w.begin(), w.end(), q.begin(), 0.0);
      for (int i = 0; i < n; ++i) w[i] -= proj * q[i];
    }
    for (const auto& q : basis) {
      double proj = std::inner_product(w.begin(), w.end(), q.begin(), 0.0);
      for (int i = 0; i < n; ++i) w[i] -= proj * q[i];
    }
    double b = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
    int m = static_cast<int>(alpha.size());
    bool space_exhausted = b < 1e-14 || m == n;
    bool check_now = space_exhausted || (m >= count + 2 && m % 10 == 0);
    if (check_now) {
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i) {
        t(i, i) = alpha[i];
        if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
      }
      tri_solver.compute(t);
      bool converged = true;
      for (int e = 0; e < count && converged; ++e)
        if (b * std::abs(tri_solver.eigenvectors()(m - 1, e)) > 1e-8) converged = false;
      if (converged || space_exhausted) {
        if (m < count) throw NumericalError("lanczos: invariant subspace smaller than request");
        eigenvalues.assign(count, 0.0);
        eigenvectors = DenseMatrix(n, count);
        for (int e = 0; e < count; ++e) {
          eigenvalues[e] = tri_solver.eigenvalues()(e);
          for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int q = 0; q < m; ++q) acc += basis[q][i] * tri_solver.eigenvectors()(q, e);
            eigenvectors.at(i, e) = acc;
          }
        }
        return;
      }
    }
    if (space_exhausted) break;
    beta.push_back(b);
    for (int i = 0; i < n; ++i) v[i] = w[i] / b;
  }
  throw NumericalError("lanczos: eigensolver did not converge within the iteration budget");
}

}  // namespace detail

SimilarityEncoding laplacian_encoding(const SparseMatrix& a_k, int d_sim, int source_k) {
  if (a_k.rows != a_k.cols) throw ValidationError("laplacian_encoding: matrix not square");
  const int n = a_k.rows;
  if (d_sim < 1 || d_sim + 1 > n)
    throw ValidationError("laplacian_encoding: need 1 <= d_sim <= n - 1");
  SparseMatrix lap = normalized_laplacian(a_k);

  std::vector<double> vals;
  std::vector<std::vector<double>> vecs;
  if (n <= kDenseSolverLimit) {
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
    for (int r = 0; r < n; ++r)
      for (int j = lap.offsets[r]; j < lap.offsets[r + 1]; ++j)
        dense(r, lap.indices[j]) = lap.values[j];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense);
    if (solver.info() != Eigen::Success)
      throw NumericalError("laplacian_encoding: eigensolver failed");
    int skip = 0;
    while (skip < n && solver.eigenvalues()(skip) <= kTrivialEigenvalueTol) ++skip;
    if (d_sim > n - skip)
      throw ValidationError("laplacian_encoding: d_sim exceeds the non-trivial spectrum");
    for (int e = skip; e < skip + d_sim; ++e) {
      vals.push_back(solver.eigenvalues()(e));
      std::vector<double> v(n);
      for (int i = 0; i < n; ++i) v[i] = solver.eigenvectors()(i, e);
      fix_sign(v);
      vecs.push_back(std::move(v));
    }
  } else {
    int components = count_components(a_k);
    int want = components + d_sim;
    if (want > n)
      throw ValidationError("laplacian_encoding: d_sim exceeds the non-trivial spectrum");
    std::vector<double> all_vals;
    DenseMatrix all_vecs;
    detail::smallest_eigenpairs_lanczos(lap, want, all_vals, all_vecs);
    for (int e = components; e < want; ++e) {
      vals.push_back(all_vals[e]);
      std::vector<double> v(n);
      for (int i = 0; i < n; ++i) v[i] = all_vecs.at(i, e);
      fix_sign(v);
      vecs.push_back(std::move(v));
    }
  }
  sort_tied_eigenpairs(vals, vecs);

  SimilarityEncoding enc;
  enc.method = EncodingMethod::laplacian;
  enc.source_k = source_k;
  enc.p0 = DenseMatrix(n, d_sim);
  for (int j = 0; j < d_sim; ++j)
    for (int i = 0; i < n; ++i) enc.p0.at(i, j) = vecs[j][i];
  return enc;
}

SimilarityEncoding random_walk_encoding(const SparseMatrix& a_k, int d_sim, int source_k) {
  if (a_k.rows != a_k.cols) throw ValidationError("random_walk_encoding: matrix not square");
  const int n = a_k.rows;
  if (d_sim < 1 || d_sim + 1 > n)
    throw ValidationError("random_walk_encoding: need 1 <= d_sim <= n - 1");
  std::vector<double> deg(n, 0.0);
  for (int r = 0; r < n; ++r)
    for (int j = a_k.offsets[r]; j < a_k.offsets[r + 1]; ++j) deg[a_k.indices[j]] += a_k.values[j];
  SparseMatrix rw = a_k;
  for (int r = 0; r < n; ++r)
    for (int j = rw.offsets[r]; j < rw.offsets[r + 1]; ++j) {
      int c = rw.indices[j];
      rw.values[j] = deg[c] > 0.0 ? rw.values[j] / deg[c] : 0.0;
    }

  SimilarityEncoding enc;
  enc.method = EncodingMethod::random_walk;
  enc.source_k = source_k;
  enc.p0 = DenseMatrix(n, d_sim);
  DenseMatrix power = to_dense(SparseMatrix::identity(n));
  for (int t = 1; t <= d_sim; ++t) {
    power = sparse_dense_multiply(rw, power);
    for (int i = 0; i < n; ++i) enc.p0.at(i, t - 1) = power.at(i, i);
  }
  return enc;
}

}  // namespace sagif
