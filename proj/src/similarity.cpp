#include "sagif/similarity.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <tuple>
#include <unordered_set>

#include "sagif/errors.hpp"

namespace sagif {

void FusionConfig::validate(int n) const {
  if (k < 1 || k >= n) throw ValidationError("fusion config: need 1 <= k < n");
  if (lambda < 0.0 || lambda > 1.0) throw ValidationError("fusion config: lambda outside [0, 1]");
  if (d_sim < 1 || d_sim > n) throw ValidationError("fusion config: need 1 <= d_sim <= n");
}

SparseMatrix build_knn_graph(const OracleSimilarity& sim) {
  std::vector<std::tuple<int, int, double>> triplets;
  triplets.reserve(static_cast<std::size_t>(sim.n) * sim.k * 2);
  for (int i = 0; i < sim.n; ++i)
    for (int j = 0; j < sim.k; ++j) {
      int nb = sim.neighbor(i, j);
      triplets.emplace_back(i, nb, 1.0);
      triplets.emplace_back(nb, i, 1.0);
    }
  SparseMatrix a = SparseMatrix::from_triplets(sim.n, sim.n, std::move(triplets));
  for (double& v : a.values) v = 1.0;  // union, not sum
  return a;
}

SparseMatrix topology_fusion_matrix(const GraphBundle& g, const FusionConfig& cfg) {
  cfg.validate(g.n);
  SparseMatrix structure = normalize_adjacency(g.adjacency, true);
  SparseMatrix a_k = build_knn_graph(row_cosine_topk(g.features, cfg.k, true));
  SparseMatrix feature = normalize_adjacency(a_k, false);
  return sparse_add(cfg.lambda, structure, 1.0 - cfg.lambda, feature);
}

OracleSimilarity oracle_from_topology_fusion(const GraphBundle& g, const FusionConfig& cfg) {
  return row_cosine_topk(topology_fusion_matrix(g, cfg), cfg.k, true);
}

DenseMatrix all_pairs_distances(const SparseMatrix& adjacency) {
  if (adjacency.rows != adjacency.cols)
    throw ValidationError("all_pairs_distances: matrix not square");
  const int n = adjacency.rows;
  const double inf = std::numeric_limits<double>::infinity();
  DenseMatrix m(n, n, inf);
  std::vector<int> queue(n);
  for (int src = 0; src < n; ++src) {
    double* dist = m.row(src);
    dist[src] = 0.0;
    int head = 0, tail = 0;
    queue[tail++] = src;
    while (head < tail) {
      int u = queue[head++];
      double du = dist[u];
      for (int j = adjacency.offsets[u]; j < adjacency.offsets[u + 1]; ++j) {
        int v = adjacency.indices[j];
        if (dist[v] == inf) {
          dist[v] = du + 1.0;
          queue[tail++] = v;
        }
      }
    }
  }
  return m;
}

DenseMatrix map_distances(const DenseMatrix& m) {
  const double inf = std::numeric_limits<double>::infinity();
  DenseMatrix out(m.rows, m.cols);
  for (int i = 0; i < m.rows; ++i) {
    const double* row = m.row(i);
    double row_max = 0.0;
    for (int j = 0; j < m.cols; ++j)
      if (row[j] != inf) row_max = std::max(row_max, row[j]);
    double* orow = out.row(i);
    for (int j = 0; j < m.cols; ++j) {
      if (row[j] == inf)
        orow[j] = -1.5;
      else if (row_max == 0.0)
        orow[j] = 1.0;
      else
        orow[j] = std::cos(std::numbers::pi * row[j] / row_max);
    }
  }
  return out;
}

DenseMatrix pca_reduce(const DenseMatrix& m, int d_sim) {
  if (d_sim < 1 || d_sim > std::min(m.rows, m.cols))
    throw ValidationError("pca_reduce: d_sim out of range");
  for (double v : m.data)
    if (!std::isfinite(v)) throw ValidationError("pca_reduce: input must be finite");

  Eigen::MatrixXd centered(m.rows, m.cols);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) centered(i, j) = m.at(i, j);
  centered.rowwise() -= centered.colwise().mean();

  Eigen::MatrixXd cov = centered.transpose() * centered;
  if (m.rows > 1) cov /= static_cast<double>(m.rows - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericalError("pca_reduce: eigensolver failed");

  // Eigen sorts ascending; take the top d_sim, sign-fixed.
  Eigen::MatrixXd dirs(m.cols, d_sim);
  for (int c = 0; c < d_sim; ++c) {
    Eigen::VectorXd v = solver.eigenvectors().col(m.cols - 1 - c);
    int arg = 0;
    for (int r = 1; r < v.size(); ++r)
      if (std::abs(v(r)) > std::abs(v(arg))) arg = r;
    if (v(arg) < 0.0) v = -v;
    dirs.col(c) = v;
  }
  Eigen::MatrixXd proj = centered * dirs;
  DenseMatrix out(m.rows, d_sim);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < d_sim; ++j) out.at(i, j) = proj(i, j);
  return out;
}

OracleSimilarity oracle_from_feature_fusion(const GraphBundle& g, const FusionConfig& cfg) {
  cfg.validate(g.n);
  DenseMatrix mapped = map_distances(all_pairs_distances(g.adjacency));
  DenseMatrix reduced = pca_reduce(mapped, cfg.d_sim);
  return row_cosine_topk(hconcat(g.features, reduced), cfg.k, true);
}

OracleSimilarity build_oracle(const GraphBundle& g, const FusionConfig& cfg) {
  return cfg.kind == FusionKind::topology ? oracle_from_topology_fusion(g, cfg)
                                          : oracle_from_feature_fusion(g, cfg);
}

ConsistencyProfile similarity_consistency(const GraphBundle& g, int k) {
  if (k < 1 || k >= g.n) throw ValidationError("similarity_consistency: need 1 <= k < n");
  OracleSimilarity from_features = row_cosine_topk(g.features, k, true);
  OracleSimilarity from_structure = row_cosine_topk(g.adjacency, k, true);
  ConsistencyProfile profile;
  profile.k = k;
  profile.node_consistency.resize(g.n);
  profile.histogram.assign(k + 1, 0);
  for (int i = 0; i < g.n; ++i) {
    std::unordered_set<int> feat_set;
    for (int j = 0; j < k; ++j) feat_set.insert(from_features.neighbor(i, j));
    int overlap = 0;
    for (int j = 0; j < k; ++j)
      if (feat_set.count(from_structure.neighbor(i, j))) ++overlap;
    profile.node_consistency[i] = static_cast<double>(overlap) / k;
    ++profile.histogram[overlap];
  }
  return profile;
}

}  // namespace sagif
