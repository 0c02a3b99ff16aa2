#pragma once

#include <cstdint>
#include <vector>

#include "sagif/matrix.hpp"

namespace sagif {

enum class EncodingMethod : std::uint8_t { laplacian = 0, random_walk = 1 };

/// Initial similarity encoding P0 (n x d_sim) derived from the oracle kNN graph.
struct SimilarityEncoding {
  EncodingMethod method = EncodingMethod::laplacian;
  int source_k = 0;  // k of the kNN graph this was computed from
  DenseMatrix p0;
};

/// Eigenvectors of the d_sim smallest non-trivial eigenvalues of the
/// normalized Laplacian I - D^{-1/2} A D^{-1/2} of a_k (one trivial vector
/// skipped per connected component), sign-fixed so the largest-magnitude
/// coordinate of each vector is positive.
SimilarityEncoding laplacian_encoding(const SparseMatrix& a_k, int d_sim, int source_k = 0);

/// P0[i][t-1] = (RW^t)_{ii} for t = 1..d_sim with RW = A D^{-1} (return
/// probabilities). Isolated nodes get all-zero rows.
SimilarityEncoding random_walk_encoding(const SparseMatrix& a_k, int d_sim, int source_k = 0);

namespace detail {

/// Smallest `count` eigenpairs of the dense symmetric operator given by
/// sparse `l`. Lanczos with full reorthogonalization; residual tolerance
/// 1e-8, at most 5000 iterations. Exposed for testing against the dense path.
void smallest_eigenpairs_lanczos(const SparseMatrix& l, int count,
                                 std::vector<double>& eigenvalues, DenseMatrix& eigenvectors);

}  // namespace detail

}  // namespace sagif
