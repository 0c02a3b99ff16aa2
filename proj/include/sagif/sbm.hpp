#pragma once

#include <cstdint>

#include "sagif/graph.hpp"

namespace sagif {

/// Stochastic block model with Gaussian block-centroid features. mu mixes
/// block-aligned (mu = 1) and shuffled (mu = 0) feature centroids, which
/// controls the similarity consistency of the generated graph.
struct SbmSpec {
  int blocks = 3;
  int nodes_per_block = 50;
  double p_intra = 0.2;
  double p_inter = 0.01;
  int feature_dim = 32;
  double noise = 0.1;
  double mu = 1.0;

  void validate() const;
};

/// Deterministic in (spec, seed). Labels are block ids; splits are
/// 5% / 10% / 85% train/val/test over a seeded shuffle.
GraphBundle generate_sbm(const SbmSpec& spec, std::uint64_t seed);

}  // namespace sagif
