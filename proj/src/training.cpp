#include "sagif/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <tuple>

#include "sagif/errors.hpp"

namespace sagif {

TrainMethod method_from_string(const std::string& s) {
  if (s == "vanilla") return TrainMethod::vanilla;
  if (s == "inform") return TrainMethod::inform;
  if (s == "sagif") return TrainMethod::sagif;
  throw ValidationError("unknown training method: " + s);
}

std::string method_to_string(TrainMethod m) {
  switch (m) {
    case TrainMethod::vanilla: return "vanilla";
    case TrainMethod::inform: return "inform";
    case TrainMethod::sagif: return "sagif";
  }
  throw ValidationError("bad method enum");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("train config: epochs must be >= 1");
  if (lr <= 0.0) throw ValidationError("train config: learning rate must be positive");
  if (alpha < 0.0) throw ValidationError("train config: alpha must be non-negative");
  if (method == TrainMethod::sagif && !arch_is_sagif(arch))
    throw ValidationError("train config: sagif method needs a sagif architecture");
  if (method != TrainMethod::sagif && arch_is_sagif(arch))
    throw ValidationError("train config: vanilla/inform methods need a vanilla architecture");
}

namespace {

// Pairwise summation keeps scalar reductions stable under node relabeling.
double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  std::size_t half = n / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

}  // namespace

std::pair<double, DenseMatrix> cross_entropy_loss(const DenseMatrix& logits,
                                                  const std::vector<int>& labels,
                                                  const std::vector<int>& train_idx) {
  if (train_idx.empty()) throw ValidationError("cross_entropy_loss: empty training set");
  const int c = logits.cols;
  DenseMatrix grad(logits.rows, c);
  std::vector<double> losses(train_idx.size());
  const double inv = 1.0 / static_cast<double>(train_idx.size());
  for (std::size_t t = 0; t < train_idx.size(); ++t) {
    int i = train_idx[t];
    const double* row = logits.row(i);
    double mx = row[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double denom = 0.0;
    for (int j = 0; j < c; ++j) denom += std::exp(row[j] - mx);
    double log_denom = std::log(denom);
    losses[t] = log_denom - (row[labels[i]] - mx);
    double* grow = grad.row(i);
    for (int j = 0; j < c; ++j) grow[j] = std::exp(row[j] - mx) / denom * inv;
    grow[labels[i]] -= inv;
  }
  return {pairwise_sum(losses.data(), losses.size()) * inv, std::move(grad)};
}

std::pair<double, DenseMatrix> similarity_loss(const DenseMatrix& p, const OracleSimilarity& oracle,
                                               const std::vector<int>& train_idx) {
  DenseMatrix grad(p.rows, p.cols);
  if (train_idx.empty() || p.cols == 0) return {0.0, std::move(grad)};
  std::vector<char> in_train(p.rows, 0);
  for (int i : train_idx) in_train[i] = 1;
  std::vector<double> norms(p.rows, 0.0);
  for (int i = 0; i < p.rows; ++i) {
    const double* row = p.row(i);
    double sq = 0.0;
    for (int j = 0; j < p.cols; ++j) sq += row[j] * row[j];
    norms[i] = std::sqrt(sq);
  }
  const double scale = 1.0 / (static_cast<double>(oracle.k) * train_idx.size());
  std::vector<double> terms;
  for (int i : train_idx) {
    const double* pi = p.row(i);
    for (int t = 0; t < oracle.k; ++t) {
      int j = oracle.neighbor(i, t);
      if (!in_train[j]) continue;
      double target = oracle.score(i, t);
      if (norms[i] < 1e-12 || norms[j] < 1e-12) {
        terms.push_back(target * target);
        continue;
      }
      const double* pj = p.row(j);
      double dot = 0.0;
      for (int d = 0; d < p.cols; ++d) dot += pi[d] * pj[d];
      double cosv = dot / (norms[i] * norms[j]);
      double diff = cosv - target;
      terms.push_back(diff * diff);
      double coef = 2.0 * diff * scale;
      double* gi = grad.row(i);
      double* gj = grad.row(j);
      for (int d = 0; d < p.cols; ++d) {
        gi[d] += coef * (pj[d] / (norms[i] * norms[j]) - cosv * pi[d] / (norms[i] * norms[i]));
        gj[d] += coef * (pi[d] / (norms[i] * norms[j]) - cosv * pj[d] / (norms[j] * norms[j]));
      }
    }
  }
  return {pairwise_sum(terms.data(), terms.size()) * scale, std::move(grad)};
}

std::pair<double, DenseMatrix> inform_regularizer(const DenseMatrix& logits,
                                                  const OracleSimilarity& oracle) {
  // Symmetrize the stored top-k entries by max.
  std::vector<std::tuple<int, int, double>> entries;
  entries.reserve(static_cast<std::size_t>(oracle.n) * oracle.k * 2);
  for (int i = 0; i < oracle.n; ++i)
    for (int t = 0; t < oracle.k; ++t) {
      int j = oracle.neighbor(i, t);
      double s = oracle.score(i, t);
      entries.emplace_back(i, j, s);
      entries.emplace_back(j, i, s);
    }
  std::sort(entries.begin(), entries.end());
  std::vector<std::tuple<int, int, double>> merged;
  for (const auto& e : entries) {
    if (!merged.empty() && std::get<0>(merged.back()) == std::get<0>(e) &&
        std::get<1>(merged.back()) == std::get<1>(e))
      std::get<2>(merged.back()) = std::max(std::get<2>(merged.back()), std::get<2>(e));
    else
      merged.push_back(e);
  }
  SparseMatrix s_sym = SparseMatrix::from_triplets(oracle.n, oracle.n, std::move(merged));

  std::vector<double> rowsum(oracle.n, 0.0);
  for (int r = 0; r < oracle.n; ++r)
    for (int j = s_sym.offsets[r]; j < s_sym.offsets[r + 1]; ++j) rowsum[r] += s_sym.values[j];

  // L_S Y = diag(rowsum) Y - S Y
  DenseMatrix sy = sparse_dense_multiply(s_sym, logits);
  DenseMatrix ly(logits.rows, logits.cols);
  for (int i = 0; i < logits.rows; ++i)
    for (int j = 0; j < logits.cols; ++j) ly.at(i, j) = rowsum[i] * logits.at(i, j) - sy.at(i, j);

  std::vector<double> terms(logits.rows, 0.0);
  for (int i = 0; i < logits.rows; ++i) {
    double acc = 0.0;
    for (int j = 0; j < logits.cols; ++j) acc += logits.at(i, j) * ly.at(i, j);
    terms[i] = acc;
  }
  double value = 2.0 * pairwise_sum(terms.data(), terms.size());
  DenseMatrix grad = ly;
  for (double& v : grad.data) v *= 4.0;
  return {value, std::move(grad)};
}

void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, double lr,
               double weight_decay, int t) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  if (t < 1) throw ValidationError("adam_step: step counter must be >= 1");
  if (state.m.empty()) {
    for (const auto& [name, w] : params.params) {
      state.m.emplace_back(name, DenseMatrix(w.rows, w.cols));
      state.v.emplace_back(name, DenseMatrix(w.rows, w.cols));
    }
  }
  const double bc1 = 1.0 - std::pow(beta1, t);
  const double bc2 = 1.0 - std::pow(beta2, t);
  for (std::size_t p = 0; p < params.params.size(); ++p) {
    DenseMatrix& w = params.params[p].second;
    const DenseMatrix& g = grads[p].second;
    DenseMatrix& m = state.m[p].second;
    DenseMatrix& v = state.v[p].second;
    for (std::size_t i = 0; i < w.data.size(); ++i) {
      double gi = g.data[i] + weight_decay * w.data[i];
      m.data[i] = beta1 * m.data[i] + (1.0 - beta1) * gi;
      v.data[i] = beta2 * v.data[i] + (1.0 - beta2) * gi * gi;
      double mhat = m.data[i] / bc1;
      double vhat = v.data[i] / bc2;
      w.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

double accuracy(const DenseMatrix& logits, const std::vector<int>& labels,
                const std::vector<int>& idx) {
  if (idx.empty()) return 0.0;
  int hits = 0;
  for (int i : idx) {
    const double* row = logits.row(i);
    int arg = 0;
    for (int j = 1; j < logits.cols; ++j)
      if (row[j] > row[arg]) arg = j;
    if (arg == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / idx.size();
}

TrainResult train(const GraphBundle& g, const TrainConfig& cfg) {
  return train_with_precomputed(g, cfg, nullptr, nullptr);
}

TrainResult train_with_precomputed(const GraphBundle& g, const TrainConfig& cfg,
                                   const OracleSimilarity* oracle_in,
                                   const SimilarityEncoding* encoding_in) {
  auto start = std::chrono::steady_clock::now();
  cfg.validate();
  g.validate();

  SparseMatrix norm_adj = normalize_adjacency(g.adjacency, true);

  OracleSimilarity oracle;
  const bool needs_oracle = cfg.method != TrainMethod::vanilla;
  if (needs_oracle) {
    if (oracle_in != nullptr) {
      oracle = *oracle_in;
    } else {
      FusionConfig fc;
      fc.kind = cfg.fusion;
      fc.k = cfg.k;
      fc.lambda = cfg.lambda;
      fc.d_sim = cfg.d_sim;
      oracle = build_oracle(g, fc);
    }
  }

  DenseMatrix p0;
  const bool is_sagif = cfg.method == TrainMethod::sagif;
  if (is_sagif && cfg.d_sim > 0) {
    if (encoding_in != nullptr) {
      p0 = encoding_in->p0;
    } else {
      SparseMatrix a_k = build_knn_graph(oracle);
      SimilarityEncoding enc = cfg.encoding == EncodingMethod::laplacian
                                   ? laplacian_encoding(a_k, cfg.d_sim, cfg.k)
                                   : random_walk_encoding(a_k, cfg.d_sim, cfg.k);
      p0 = std::move(enc.p0);
    }
  } else if (is_sagif) {
    p0 = DenseMatrix(g.n, 0);
  }

  ModelDescriptor desc;
  desc.arch = cfg.arch;
  desc.in_dim = g.features.cols;
  desc.hidden = cfg.hidden;
  desc.d_sim = is_sagif ? p0.cols : 0;
  desc.classes = g.num_classes;
  ModelParams params = init_params(desc, cfg.seed);

  AdamState adam;
  TrainResult result;
  result.best_epoch = 0;
  result.best_val_accuracy = -1.0;
  ModelParams best = params;
  const double coeff = cfg.method == TrainMethod::inform ? cfg.inform_alpha : cfg.alpha;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    ForwardTrace trace = forward(params, norm_adj, g.features, is_sagif ? &p0 : nullptr);
    auto [task, grad_logits] = cross_entropy_loss(trace.logits, g.labels, g.train_idx);
    for (double v : trace.logits.data)
      if (!std::isfinite(v)) throw NumericalError("train: non-finite logits");

    EpochLoss loss;
    loss.task = task;
    DenseMatrix grad_p;
    if (is_sagif && cfg.record_similarity) {
      auto [ls, gp] = similarity_loss(trace.sim_repr, oracle, g.train_idx);
      loss.similarity = ls;
      grad_p = std::move(gp);
      for (double& v : grad_p.data) v *= cfg.alpha;
    } else if (is_sagif) {
      grad_p = DenseMatrix(trace.sim_repr.rows, trace.sim_repr.cols);
    } else if (cfg.method == TrainMethod::inform) {
      auto [reg, gr] = inform_regularizer(trace.logits, oracle);
      loss.similarity = reg;
      for (std::size_t i = 0; i < grad_logits.data.size(); ++i)
        grad_logits.data[i] += cfg.inform_alpha * gr.data[i];
    }
    loss.total = loss.task + coeff * loss.similarity;
    if (!std::isfinite(loss.total)) throw NumericalError("train: non-finite loss");
    result.trace.push_back(loss);

    double val_acc = accuracy(trace.logits, g.labels, g.val_idx);
    if (val_acc > result.best_val_accuracy) {
      result.best_val_accuracy = val_acc;
      result.best_epoch = epoch - 1;
      best = params;
    }

    Gradients grads = backward(trace, params, norm_adj, g.features, is_sagif ? &p0 : nullptr,
                               grad_logits, is_sagif ? &grad_p : nullptr);
    adam_step(params, grads, adam, cfg.lr, cfg.weight_decay, epoch);

    if (cfg.patience > 0 && epoch - 1 - result.best_epoch >= cfg.patience) break;
  }

  result.params = cfg.select == SelectMode::best_val ? best : params;
  result.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace sagif
