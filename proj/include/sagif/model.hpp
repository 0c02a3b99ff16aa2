#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sagif/matrix.hpp"

namespace sagif {

enum class Arch { gcn2, sgc1, sagif_gcn, sagif_sgc };

Arch arch_from_string(const std::string& s);
std::string arch_to_string(Arch a);
bool arch_is_sagif(Arch a);

struct ModelDescriptor {
  Arch arch = Arch::gcn2;
  int in_dim = 0;   // feature width d
  int hidden = 16;  // d' (GCN variants only)
  int d_sim = 0;    // similarity encoding width (sagif variants; 0 degenerates to vanilla)
  int classes = 0;
};

/// Named parameter matrices; biases are stored as 1 x cols rows.
struct ModelParams {
  ModelDescriptor desc;
  std::vector<std::pair<std::string, DenseMatrix>> params;

  DenseMatrix& find(const std::string& name);
  const DenseMatrix& find(const std::string& name) const;
};

using Gradients = std::vector<std::pair<std::string, DenseMatrix>>;

/// Forward results plus the cached activations backward() needs.
struct ForwardTrace {
  Arch arch = Arch::gcn2;
  DenseMatrix logits;    // n x C
  DenseMatrix sim_repr;  // n x d_sim, final similarity representations (sagif only)
  // Cached intermediates, meaning depends on arch.
  DenseMatrix ax;   // propagated main input
  DenseMatrix z1;   // pre-activation of layer 1 (GCN variants)
  DenseMatrix ah1;  // propagated hidden (gcn2) / propagated concat (sagif_gcn)
  DenseMatrix ap;   // propagated p0 (sagif variants)
  DenseMatrix cat;  // head input before propagation/affine (sagif variants)
};

/// Glorot-uniform weights, zero biases, deterministic in seed.
ModelParams init_params(const ModelDescriptor& desc, std::uint64_t seed);

ForwardTrace forward_vanilla_gcn(const ModelParams& p, const SparseMatrix& norm_adj,
                                 const DenseMatrix& x);
ForwardTrace forward_vanilla_sgc(const ModelParams& p, const SparseMatrix& norm_adj,
                                 const DenseMatrix& x);
ForwardTrace forward_sagif(const ModelParams& p, const SparseMatrix& norm_adj,
                           const DenseMatrix& x, const DenseMatrix& p0);

/// Dispatch on the descriptor; p0 may be null for the vanilla architectures.
ForwardTrace forward(const ModelParams& p, const SparseMatrix& norm_adj, const DenseMatrix& x,
                     const DenseMatrix* p0);

/// Exact reverse-mode gradients for the scalar loss whose partials with
/// respect to the logits (and, for sagif, the final similarity
/// representations) are supplied. grad_p may be null for vanilla models.
Gradients backward(const ForwardTrace& trace, const ModelParams& p, const SparseMatrix& norm_adj,
                   const DenseMatrix& x, const DenseMatrix* p0, const DenseMatrix& grad_logits,
                   const DenseMatrix* grad_p);

}  // namespace sagif
