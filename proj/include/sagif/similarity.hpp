#pragma once

#include <vector>

#include "sagif/graph.hpp"

namespace sagif {

enum class FusionKind { topology, feature };

struct FusionConfig {
  FusionKind kind = FusionKind::topology;
  int k = 10;           // kNN size
  double lambda = 0.5;  // topology fusion only
  int d_sim = 16;       // PCA output dimension, feature fusion only

  void validate(int n) const;
};

/// Per-node similarity consistency c_v = |top-k(features) ∩ top-k(structure)| / k
/// with a histogram over the k+1 possible levels {0, 1/k, ..., 1}.
struct ConsistencyProfile {
  int k = 0;
  std::vector<double> node_consistency;  // length n
  std::vector<int> histogram;            // length k + 1; level i <-> c = i / k
};

/// Binary kNN adjacency symmetrized by union: edge (i, j) iff j in top-k(i)
/// or i in top-k(j). Zero diagonal.
SparseMatrix build_knn_graph(const OracleSimilarity& sim);

/// P = lambda * norm(A + I) + (1 - lambda) * norm(A_k) where A_k is the
/// feature kNN graph (cosine on X).
SparseMatrix topology_fusion_matrix(const GraphBundle& g, const FusionConfig& cfg);

OracleSimilarity oracle_from_topology_fusion(const GraphBundle& g, const FusionConfig& cfg);

/// Hop-count shortest paths by per-source BFS; unreachable pairs are +inf.
DenseMatrix all_pairs_distances(const SparseMatrix& adjacency);

/// Maps distances into [-1, 1] via cos(pi * d / row_max); unreachable -> -1.5.
/// An isolated node (finite row max 0) maps all its finite entries to 1.
DenseMatrix map_distances(const DenseMatrix& m);

/// Column-centered projection onto the d_sim top principal directions,
/// descending explained variance, deterministic sign convention (largest
/// magnitude coordinate of each direction made positive).
DenseMatrix pca_reduce(const DenseMatrix& m, int d_sim);

OracleSimilarity oracle_from_feature_fusion(const GraphBundle& g, const FusionConfig& cfg);

/// Dispatches on cfg.kind.
OracleSimilarity build_oracle(const GraphBundle& g, const FusionConfig& cfg);

ConsistencyProfile similarity_consistency(const GraphBundle& g, int k);

}  // namespace sagif
