#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sagif/encoding.hpp"
#include "sagif/graph.hpp"
#include "sagif/model.hpp"
#include "sagif/similarity.hpp"

namespace sagif {

enum class TrainMethod { vanilla, inform, sagif };

TrainMethod method_from_string(const std::string& s);
std::string method_to_string(TrainMethod m);

enum class SelectMode { best_val, final };

struct TrainConfig {
  TrainMethod method = TrainMethod::vanilla;
  Arch arch = Arch::gcn2;
  int epochs = 500;
  double lr = 0.01;
  double weight_decay = 1e-5;
  double alpha = 0.5;          // similarity-loss weight
  double inform_alpha = 1e-6;  // InFoRM regularizer weight
  int k = 10;
  double lambda = 0.5;
  int d_sim = 16;
  int hidden = 16;
  FusionKind fusion = FusionKind::topology;
  EncodingMethod encoding = EncodingMethod::laplacian;
  std::uint64_t seed = 0;
  SelectMode select = SelectMode::best_val;
  int patience = 0;  // early stopping disabled when <= 0
  bool record_similarity = true;  // when false, skip L_s bookkeeping (trace stores 0)

  void validate() const;
};

struct EpochLoss {
  double task = 0.0;
  double similarity = 0.0;  // L_s for sagif, the regularizer value for inform
  double total = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochLoss> trace;
  int best_epoch = 0;
  double best_val_accuracy = 0.0;
  double wall_clock_seconds = 0.0;  // informational; never serialized
};

/// Mean softmax cross-entropy over train_idx, log-sum-exp stabilized.
/// Returns the scalar and the gradient with respect to the logits (zero
/// outside train_idx).
std::pair<double, DenseMatrix> cross_entropy_loss(const DenseMatrix& logits,
                                                  const std::vector<int>& labels,
                                                  const std::vector<int>& train_idx);

/// Similarity-preservation loss over training-node oracle pairs:
/// mean over (i in train, j oracle neighbor of i, j in train) of
/// (cos(P_i, P_j) - S_ij)^2, scaled by 1 / (k * |train|).
std::pair<double, DenseMatrix> similarity_loss(const DenseMatrix& p, const OracleSimilarity& oracle,
                                               const std::vector<int>& train_idx);

/// 2 Tr(Y^T L_S Y) for the symmetrized sparse oracle, with gradient 4 L_S Y.
std::pair<double, DenseMatrix> inform_regularizer(const DenseMatrix& logits,
                                                  const OracleSimilarity& oracle);

struct AdamState {
  std::vector<std::pair<std::string, DenseMatrix>> m;
  std::vector<std::pair<std::string, DenseMatrix>> v;
};

/// One Adam step (beta1 = 0.9, beta2 = 0.999, eps = 1e-8, bias correction)
/// with classic coupled L2: the gradient gets weight_decay * theta added.
void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, double lr,
               double weight_decay, int t);

/// Accuracy of argmax predictions over the given index set (argmax ties go
/// to the smaller class index).
double accuracy(const DenseMatrix& logits, const std::vector<int>& labels,
                const std::vector<int>& idx);

TrainResult train(const GraphBundle& g, const TrainConfig& cfg);

/// Same as train() but reuses a precomputed oracle/encoding when supplied
/// (either pointer may be null).
TrainResult train_with_precomputed(const GraphBundle& g, const TrainConfig& cfg,
                                   const OracleSimilarity* oracle,
                                   const SimilarityEncoding* encoding);

}  // namespace sagif
