#pragma once

#include <span>
#include <vector>

#include "sagif/graph.hpp"
#include "sagif/model.hpp"
#include "sagif/similarity.hpp"

namespace sagif {

struct ConsistencyGroupRow {
  double consistency = 0.0;
  int count = 0;
  double mean_ndcg = 0.0;
};

struct MetricsReport {
  int k = 0;
  double auc = 0.0;
  double ndcg_at_k = 0.0;
  double err_at_k = 0.0;
  double accuracy = 0.0;
  std::vector<ConsistencyGroupRow> groups;  // groups with > 10 evaluated nodes
};

/// Macro one-vs-rest ROC AUC over softmax probabilities, midrank tie
/// handling; classes absent from eval_idx are skipped.
double macro_ovr_auc(const DenseMatrix& logits, const std::vector<int>& labels,
                     const std::vector<int>& eval_idx);

DenseMatrix softmax_rows(const DenseMatrix& logits);

/// Output-space similarity source: cosine between softmax probability rows,
/// computed lazily per pair (no n^2 materialization).
class OutputSimilarity {
 public:
  explicit OutputSimilarity(const ForwardTrace& trace) : probs_(softmax_rows(trace.logits)) {}
  double score(int i, int j) const { return row_cosine(probs_, i, j); }
  int nodes() const { return probs_.rows; }

 private:
  DenseMatrix probs_;
};

/// NDCG@k with continuous oracle gains; predicted ties broken by smaller
/// candidate index; returns 1 when IDCG is 0.
double ndcg_at_k(std::span<const double> predicted, std::span<const double> oracle, int k);

/// ERR@k over integer grades 0..g_max assigned by oracle rank quantile
/// (top-k oracle items spread over grades g_max..1, the rest grade 0).
double err_at_k(std::span<const double> predicted, std::span<const double> oracle, int k,
                int g_max = 4);

/// Utility + fairness report on the test split: candidate pool for each test
/// node is the other test nodes; oracle = feature cosine. Per-consistency
/// groups with more than 10 evaluated nodes get a mean NDCG breakdown.
MetricsReport fairness_report(const GraphBundle& g, const ForwardTrace& trace, int k);

}  // namespace sagif
