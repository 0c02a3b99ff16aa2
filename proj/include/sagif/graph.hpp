#pragma once

#include <vector>

#include "sagif/matrix.hpp"

namespace sagif {

/// Immutable attributed graph: symmetric binary adjacency, dense features,
/// integer labels and disjoint train/val/test splits.
struct GraphBundle {
  int n = 0;            // node count
  int m = 0;            // undirected edge count
  int num_classes = 0;  // labels take values in [0, num_classes)
  SparseMatrix adjacency;
  DenseMatrix features;
  std::vector<int> labels;
  std::vector<int> train_idx;
  std::vector<int> val_idx;
  std::vector<int> test_idx;

  void validate() const;  // throws ValidationError
};

/// Per-node top-k sparse similarity: for node i, neighbors(i, 0..k-1) are the
/// k most similar other nodes with non-increasing scores.
struct OracleSimilarity {
  int n = 0;
  int k = 0;
  std::vector<int> neighbors;   // n * k
  std::vector<double> scores;   // n * k

  int neighbor(int i, int j) const { return neighbors[static_cast<std::size_t>(i) * k + j]; }
  double score(int i, int j) const { return scores[static_cast<std::size_t>(i) * k + j]; }

  void check_invariants() const;
};

/// D^{-1/2} (A [+ I]) D^{-1/2}. Zero-degree rows stay all-zero (0^{-1/2} is
/// taken as 0 so isolated nodes flow through).
SparseMatrix normalize_adjacency(const SparseMatrix& adjacency, bool add_self_loops);

/// Top-k cosine neighbors per row. Zero-norm rows have similarity 0 against
/// everything; ties broken by smaller index.
OracleSimilarity row_cosine_topk(const DenseMatrix& mat, int k, bool exclude_self);
OracleSimilarity row_cosine_topk(const SparseMatrix& mat, int k, bool exclude_self);

/// Cosine similarity between two rows of a dense matrix (0 when either row
/// has zero norm). Shared by oracle construction and evaluation.
double row_cosine(const DenseMatrix& mat, int i, int j);

}  // namespace sagif
