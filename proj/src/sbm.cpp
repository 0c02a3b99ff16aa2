#include "sagif/sbm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <tuple>

#include "sagif/errors.hpp"

namespace sagif {

namespace {

// Portable deterministic RNG (splitmix64 stream).
struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double uniform() { return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0); }

  double normal() {
    // Box-Muller; discard the second variate to keep the stream simple.
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[next() % i]);
  }
};

}  // namespace

void SbmSpec::validate() const {
  if (blocks < 2) throw ValidationError("sbm: need at least 2 blocks");
  if (nodes_per_block < 2) throw ValidationError("sbm: need at least 2 nodes per block");
  if (p_intra < 0.0 || p_intra > 1.0 || p_inter < 0.0 || p_inter > 1.0)
    throw ValidationError("sbm: edge probabilities outside [0, 1]");
  if (feature_dim < 1) throw ValidationError("sbm: feature dimension must be positive");
  if (noise < 0.0) throw ValidationError("sbm: noise must be non-negative");
  if (mu < 0.0 || mu > 1.0) throw ValidationError("sbm: mu outside [0, 1]");
}

GraphBundle generate_sbm(const SbmSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed ^ 0x5b3a9c42ULL);
  const int n = spec.blocks * spec.nodes_per_block;

  // Block centroids: random unit-normalized Gaussian vectors.
  std::vector<std::vector<double>> centroids(spec.blocks,
                                             std::vector<double>(spec.feature_dim, 0.0));
  for (auto& c : centroids) {
    double sq = 0.0;
    for (double& v : c) {
      v = rng.normal();
      sq += v * v;
    }
    double nrm = std::sqrt(sq);
    for (double& v : c) v /= nrm;
  }

  // Feature-side block assignment: a seeded node permutation decouples the
  // feature clusters from the topology blocks when mu < 1.
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);

  GraphBundle g;
  g.n = n;
  g.num_classes = spec.blocks;
  g.labels.resize(n);
  for (int i = 0; i < n; ++i) g.labels[i] = i / spec.nodes_per_block;

  g.features = DenseMatrix(n, spec.feature_dim);
  for (int i = 0; i < n; ++i) {
    int topo_block = g.labels[i];
    int shuffled_block = perm[i] / spec.nodes_per_block;
    double* row = g.features.row(i);
    for (int d = 0; d < spec.feature_dim; ++d)
      row[d] = spec.mu * centroids[topo_block][d] +
               (1.0 - spec.mu) * centroids[shuffled_block][d] + spec.noise * rng.normal();
  }

  std::vector<std::tuple<int, int, double>> triplets;
  int m = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double p = g.labels[i] == g.labels[j] ? spec.p_intra : spec.p_inter;
      if (rng.uniform() < p) {
        triplets.emplace_back(i, j, 1.0);
        triplets.emplace_back(j, i, 1.0);
        ++m;
      }
    }
  g.m = m;
  g.adjacency = SparseMatrix::from_triplets(n, n, std::move(triplets));

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  int n_train = std::max(1, n * 5 / 100);
  int n_val = std::max(1, n * 10 / 100);
  g.train_idx.assign(order.begin(), order.begin() + n_train);
  g.val_idx.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  g.test_idx.assign(order.begin() + n_train + n_val, order.end());
  std::sort(g.train_idx.begin(), g.train_idx.end());
  std::sort(g.val_idx.begin(), g.val_idx.end());
  std::sort(g.test_idx.begin(), g.test_idx.end());
  return g;
}

}  // namespace sagif
