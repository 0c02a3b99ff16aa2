#include "sagif/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sagif/errors.hpp"
#include "sagif/training.hpp"

namespace sagif {

DenseMatrix softmax_rows(const DenseMatrix& logits) {
  DenseMatrix out(logits.rows, logits.cols);
  for (int i = 0; i < logits.rows; ++i) {
    const double* row = logits.row(i);
    double* orow = out.row(i);
    double mx = row[0];
    for (int j = 1; j < logits.cols; ++j) mx = std::max(mx, row[j]);
    double denom = 0.0;
    for (int j = 0; j < logits.cols; ++j) {
      orow[j] = std::exp(row[j] - mx);
      denom += orow[j];
    }
    for (int j = 0; j < logits.cols; ++j) orow[j] /= denom;
  }
  return out;
}

double macro_ovr_auc(const DenseMatrix& logits, const std::vector<int>& labels,
                     const std::vector<int>& eval_idx) {
  if (eval_idx.empty()) throw ValidationError("macro_ovr_auc: empty evaluation set");
  DenseMatrix probs = softmax_rows(logits);
  std::vector<int> class_counts(logits.cols, 0);
  for (int i : eval_idx) ++class_counts[labels[i]];
  int present = 0;
  for (int c : class_counts)
    if (c > 0) ++present;
  if (present < 2) throw ValidationError("macro_ovr_auc: evaluation set has a single class");

  const int n = static_cast<int>(eval_idx.size());
  double total = 0.0;
  for (int c = 0; c < logits.cols; ++c) {
    if (class_counts[c] == 0) continue;
    // Midrank Mann-Whitney over the class-c probability column.
    std::vector<std::pair<double, int>> scored(n);  // (score, is_positive)
    for (int t = 0; t < n; ++t)
      scored[t] = {probs.at(eval_idx[t], c), labels[eval_idx[t]] == c ? 1 : 0};
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    double pos_rank_sum = 0.0;
    int t = 0;
    while (t < n) {
      int u = t;
      while (u < n && scored[u].first == scored[t].first) ++u;
      double midrank = (t + 1 + u) / 2.0;  // average of ranks t+1..u
      for (int s = t; s < u; ++s)
        if (scored[s].second) pos_rank_sum += midrank;
      t = u;
    }
    double n_pos = class_counts[c];
    double n_neg = n - n_pos;
    total += (pos_rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
  }
  return total / present;
}

namespace {

// Candidate order by descending score, ties to the smaller index.
std::vector<int> rank_order(std::span<const double> scores) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  return order;
}

}  // namespace

double ndcg_at_k(std::span<const double> predicted, std::span<const double> oracle, int k) {
  if (predicted.size() != oracle.size()) throw ValidationError("ndcg_at_k: size mismatch");
  if (k < 1 || k > static_cast<int>(predicted.size()))
    throw ValidationError("ndcg_at_k: k out of range");
  std::vector<int> pred_order = rank_order(predicted);
  std::vector<int> ideal_order = rank_order(oracle);
  double dcg = 0.0, idcg = 0.0;
  for (int r = 1; r <= k; ++r) {
    double discount = 1.0 / std::log2(r + 1.0);
    dcg += oracle[pred_order[r - 1]] * discount;
    idcg += oracle[ideal_order[r - 1]] * discount;
  }
  if (idcg == 0.0) return 1.0;
  return dcg / idcg;
}

double err_at_k(std::span<const double> predicted, std::span<const double> oracle, int k,
                int g_max) {
  if (predicted.size() != oracle.size()) throw ValidationError("err_at_k: size mismatch");
  if (k < 1 || k > static_cast<int>(predicted.size()))
    throw ValidationError("err_at_k: k out of range");
  if (g_max < 1) throw ValidationError("err_at_k: g_max must be >= 1");
  std::vector<int> ideal_order = rank_order(oracle);
  std::vector<int> grade(predicted.size(), 0);
  for (int r = 1; r <= k; ++r) {
    // Top-k oracle items spread over grades g_max..1, best rank first.
    int g = g_max - static_cast<int>((static_cast<long long>(r) - 1) * g_max / k);
    grade[ideal_order[r - 1]] = std::max(g, 1);
  }
  std::vector<int> pred_order = rank_order(predicted);
  double err = 0.0, survive = 1.0;
  double denom = std::pow(2.0, g_max);
  for (int r = 1; r <= k; ++r) {
    double stop = (std::pow(2.0, grade[pred_order[r - 1]]) - 1.0) / denom;
    err += survive * stop / r;
    survive *= 1.0 - stop;
  }
  return err;
}

namespace {

struct SparseRows {
  std::vector<int> start;
  std::vector<int> idx;
  std::vector<double> val;
  std::vector<double> norm;
};

SparseRows sparsify(const DenseMatrix& m) {
  SparseRows sr;
  sr.start.assign(m.rows + 1, 0);
  for (int i = 0; i < m.rows; ++i) {
    const double* row = m.row(i);
    double sq = 0.0;
    for (int j = 0; j < m.cols; ++j)
      if (row[j] != 0.0) {
        sr.idx.push_back(j);
        sr.val.push_back(row[j]);
        sq += row[j] * row[j];
      }
    sr.start[i + 1] = static_cast<int>(sr.idx.size());
    sr.norm.push_back(std::sqrt(sq));
  }
  return sr;
}

double sparse_cosine(const SparseRows& sr, int a, int b) {
  if (sr.norm[a] == 0.0 || sr.norm[b] == 0.0) return 0.0;
  int ia = sr.start[a], ea = sr.start[a + 1];
  int ib = sr.start[b], eb = sr.start[b + 1];
  double acc = 0.0;
  while (ia < ea && ib < eb) {
    if (sr.idx[ia] < sr.idx[ib])
      ++ia;
    else if (sr.idx[ib] < sr.idx[ia])
      ++ib;
    else
      acc += sr.val[ia++] * sr.val[ib++];
  }
  return acc / (sr.norm[a] * sr.norm[b]);
}

}  // namespace

MetricsReport fairness_report(const GraphBundle& g, const ForwardTrace& trace, int k) {
  if (g.test_idx.empty()) throw ValidationError("fairness_report: empty test split");
  std::vector<int> test = g.test_idx;
  std::sort(test.begin(), test.end());
  const int nt = static_cast<int>(test.size());
  if (k > nt - 1) throw ValidationError("fairness_report: k exceeds candidate count");

  MetricsReport report;
  report.k = k;
  report.auc = macro_ovr_auc(trace.logits, g.labels, test);
  report.accuracy = accuracy(trace.logits, g.labels, test);

  DenseMatrix probs = softmax_rows(trace.logits);
  SparseRows feat = sparsify(g.features);

  std::vector<double> per_node_ndcg(nt), per_node_err(nt);
  std::vector<double> predicted(nt - 1), oracle(nt - 1);
  for (int t = 0; t < nt; ++t) {
    int i = test[t];
    int c = 0;
    for (int u = 0; u < nt; ++u) {
      if (u == t) continue;
      int j = test[u];
      predicted[c] = row_cosine(probs, i, j);
      oracle[c] = sparse_cosine(feat, i, j);
      ++c;
    }
    per_node_ndcg[t] = ndcg_at_k(predicted, oracle, k);
    per_node_err[t] = err_at_k(predicted, oracle, k);
  }
  report.ndcg_at_k = std::accumulate(per_node_ndcg.begin(), per_node_ndcg.end(), 0.0) / nt;
  report.err_at_k = std::accumulate(per_node_err.begin(), per_node_err.end(), 0.0) / nt;

  // Per-consistency-group breakdown over the evaluated nodes.
  ConsistencyProfile profile = similarity_consistency(g, k);
  std::vector<int> counts(k + 1, 0);
  std::vector<double> sums(k + 1, 0.0);
  for (int t = 0; t < nt; ++t) {
    int level = static_cast<int>(std::lround(profile.node_consistency[test[t]] * k));
    ++counts[level];
    sums[level] += per_node_ndcg[t];
  }
  for (int level = 0; level <= k; ++level) {
    if (counts[level] <= 10) continue;
    ConsistencyGroupRow row;
    row.consistency = static_cast<double>(level) / k;
    row.count = counts[level];
    row.mean_ndcg = sums[level] / counts[level];
    report.groups.push_back(row);
  }
  return report;
}

}  // namespace sagif
