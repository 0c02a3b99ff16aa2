#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "sagif/errors.hpp"
#include "sagif/sbm.hpp"
#include "sagif/training.hpp"
#include "test_util.hpp"

using namespace sagif;

namespace {

GraphBundle random_bundle(std::mt19937_64& rng, int n, int d, int classes) {
  GraphBundle g;
  g.n = n;
  g.adjacency = testutil::random_adjacency(rng, n, 0.35);
  g.m = g.adjacency.nnz() / 2;
  g.num_classes = classes;
  g.features = testutil::random_dense(rng, n, d);
  g.labels.resize(n);
  for (int i = 0; i < n; ++i) g.labels[i] = static_cast<int>(rng() % classes);
  g.labels[0] = 0;
  g.labels[1] = 1;  // make sure both endpoints of the class range occur
  for (int i = 0; i < n; ++i) {
    if (i < n / 3) g.train_idx.push_back(i);
    else if (i < n / 2) g.val_idx.push_back(i);
    else g.test_idx.push_back(i);
  }
  return g;
}

}  // namespace

TEST_CASE("cross_entropy_loss: uniform logits, huge margins, naive reference") {
  DenseMatrix uniform(4, 3, 0.7);
  std::vector<int> labels = {0, 1, 2, 0};
  std::vector<int> train = {0, 1, 2, 3};
  auto [loss, grad] = cross_entropy_loss(uniform, labels, train);
  CHECK(loss == doctest::Approx(std::log(3.0)).epsilon(1e-12));

  DenseMatrix margin(2, 2);
  margin.data = {50.0, -50.0, -50.0, 50.0};
  auto [loss2, grad2] = cross_entropy_loss(margin, {0, 1}, {0, 1});
  CHECK(loss2 < 1e-10);

  std::mt19937_64 rng(1);
  auto logits = testutil::random_dense(rng, 4, 3);
  std::vector<int> tr = {0, 2};
  auto [loss3, grad3] = cross_entropy_loss(logits, labels, tr);
  // Naive probability-space reference.
  double want = 0.0;
  for (int i : tr) {
    double z = 0.0;
    for (int c = 0; c < 3; ++c) z += std::exp(logits.at(i, c));
    want -= std::log(std::exp(logits.at(i, labels[i])) / z);
  }
  want /= tr.size();
  CHECK(loss3 == doctest::Approx(want).epsilon(1e-10));

  // Gradient: (softmax - onehot)/|train| on train rows, zero elsewhere.
  for (int c = 0; c < 3; ++c) {
    CHECK(grad3.at(1, c) == 0.0);
    CHECK(grad3.at(3, c) == 0.0);
  }
  const double h = 1e-6;
  for (int i : tr)
    for (int c = 0; c < 3; ++c) {
      auto bumped = logits;
      bumped.at(i, c) += h;
      auto [up, gu] = cross_entropy_loss(bumped, labels, tr);
      bumped.at(i, c) -= 2 * h;
      auto [dn, gd] = cross_entropy_loss(bumped, labels, tr);
      CHECK(grad3.at(i, c) == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-4));
    }
  CHECK_THROWS_AS(cross_entropy_loss(logits, labels, {}), ValidationError);
}

TEST_CASE("similarity_loss: exact reproduction, orthogonal rows, finite differences") {
  // Oracle built from P itself -> cosine targets met exactly -> loss 0.
  std::mt19937_64 rng(2);
  auto p = testutil::random_dense(rng, 6, 4);
  auto oracle = row_cosine_topk(p, 2, true);
  std::vector<int> train = {0, 1, 2, 3, 4, 5};
  auto [zero_loss, zero_grad] = similarity_loss(p, oracle, train);
  CHECK(zero_loss < 1e-20);

  // Orthogonal rows with oracle scores forced to 1: each counted train-train
  // pair contributes exactly 1.
  DenseMatrix ortho(4, 4);
  for (int i = 0; i < 4; ++i) ortho.at(i, i) = 1.0;
  OracleSimilarity ones;
  ones.n = 4;
  ones.k = 2;
  ones.neighbors = {1, 2, 0, 2, 0, 1, 0, 1};
  ones.scores.assign(8, 1.0);
  std::vector<int> tr2 = {0, 1, 2};
  auto [loss2, grad2] = similarity_loss(ortho, ones, tr2);
  // Counted pairs: rows 0, 1, 2 each list two neighbors inside {0, 1, 2} -> 6.
  CHECK(loss2 == doctest::Approx(6.0 / (2.0 * 3.0)).epsilon(1e-12));

  // Finite-difference gradient on a random instance.
  auto oracle6 = row_cosine_topk(testutil::random_dense(rng, 6, 4), 2, true);
  auto p6 = testutil::random_dense(rng, 6, 3);
  std::vector<int> tr6 = {0, 1, 3, 5};
  auto [base, grad] = similarity_loss(p6, oracle6, tr6);
  const double h = 1e-6;
  for (int i = 0; i < 6; ++i)
    for (int c = 0; c < 3; ++c) {
      auto bumped = p6;
      bumped.at(i, c) += h;
      auto [up, gu] = similarity_loss(bumped, oracle6, tr6);
      bumped.at(i, c) -= 2 * h;
      auto [dn, gd] = similarity_loss(bumped, oracle6, tr6);
      double fd = (up - dn) / (2 * h);
      double denom = std::max({std::abs(fd), std::abs(grad.at(i, c)), 1e-8});
      CHECK(std::abs(fd - grad.at(i, c)) / denom <= 1e-4);
    }
}

TEST_CASE("inform_regularizer: constants, pairwise-sum identity, quadratic scaling") {
  std::mt19937_64 rng(3);
  auto feats = testutil::random_dense(rng, 8, 4);
  auto oracle = row_cosine_topk(feats, 3, true);

  DenseMatrix constant(8, 2);
  for (int i = 0; i < 8; ++i) {
    constant.at(i, 0) = 0.4;
    constant.at(i, 1) = -1.1;
  }
  auto [cv, cg] = inform_regularizer(constant, oracle);
  CHECK(std::abs(cv) < 1e-12);
  for (double v : cg.data) CHECK(std::abs(v) < 1e-12);

  // Pairwise-sum identity: 2 Tr(Y^T L_S Y) = sum_{i,j} S_ij ||Y_i - Y_j||^2
  // over the max-symmetrized S (ordered pairs).
  auto y = testutil::random_dense(rng, 8, 3);
  auto [val, grad] = inform_regularizer(y, oracle);
  // Reference S: max over all stored (possibly negative) entries in either
  // orientation; pairs never stored stay 0.
  DenseMatrix s(8, 8);
  DenseMatrix present(8, 8);
  for (int i = 0; i < 8; ++i)
    for (int t = 0; t < 3; ++t) {
      int j = oracle.neighbor(i, t);
      double v = oracle.score(i, t);
      for (auto [a, b] : {std::pair{i, j}, std::pair{j, i}}) {
        s.at(a, b) = present.at(a, b) != 0.0 ? std::max(s.at(a, b), v) : v;
        present.at(a, b) = 1.0;
      }
    }
  double want = 0.0;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      double diff2 = 0.0;
      for (int c = 0; c < 3; ++c) {
        double d = y.at(i, c) - y.at(j, c);
        diff2 += d * d;
      }
      want += s.at(i, j) * diff2;
    }
  CHECK(val == doctest::Approx(want).epsilon(1e-9));

  auto y2 = y;
  for (double& v : y2.data) v *= 3.0;
  auto [val9, g9] = inform_regularizer(y2, oracle);
  CHECK(val9 == doctest::Approx(9.0 * val).epsilon(1e-9));

  // Gradient 4 L_S Y by finite differences.
  const double h = 1e-6;
  for (int i = 0; i < 8; ++i)
    for (int c = 0; c < 3; ++c) {
      auto bumped = y;
      bumped.at(i, c) += h;
      auto [up, gu] = inform_regularizer(bumped, oracle);
      bumped.at(i, c) -= 2 * h;
      auto [dn, gd] = inform_regularizer(bumped, oracle);
      CHECK(grad.at(i, c) == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-5));
    }
}

TEST_CASE("inform identity holds on many random instances up to n = 30") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 25; ++trial) {
    int n = 5 + static_cast<int>(rng() % 26);
    int k = 2 + static_cast<int>(rng() % 3);
    if (k >= n) k = n - 1;
    auto oracle = row_cosine_topk(testutil::random_dense(rng, n, 4, 0.0, 1.0), k, true);
    auto y = testutil::random_dense(rng, n, 2);
    auto [val, grad] = inform_regularizer(y, oracle);
    DenseMatrix s(n, n);
    for (int i = 0; i < n; ++i)
      for (int t = 0; t < k; ++t) {
        int j = oracle.neighbor(i, t);
        double v = oracle.score(i, t);
        s.at(i, j) = std::max(s.at(i, j), v);
        s.at(j, i) = std::max(s.at(j, i), v);
      }
    double want = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double d0 = y.at(i, 0) - y.at(j, 0);
        double d1 = y.at(i, 1) - y.at(j, 1);
        want += s.at(i, j) * (d0 * d0 + d1 * d1);
      }
    CHECK(val == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("adam_step: zero gradient, constant-gradient limit, 3-step hand trace") {
  ModelDescriptor desc{Arch::sgc1, 1, 16, 0, 2};
  ModelParams params;
  params.desc = desc;
  params.params.emplace_back("W", DenseMatrix(1, 1));
  params.find("W").at(0, 0) = 0.5;
  AdamState state;
  state.m.emplace_back("W", DenseMatrix(1, 1));
  state.v.emplace_back("W", DenseMatrix(1, 1));
  Gradients zero;
  zero.emplace_back("W", DenseMatrix(1, 1));

  auto unchanged = params;
  adam_step(unchanged, zero, state, 0.01, 0.0, 1);
  CHECK(unchanged.find("W").at(0, 0) == 0.5);

  // With weight decay the effective gradient is wd * theta, pulling toward 0.
  auto decayed = params;
  AdamState st2;
  st2.m.emplace_back("W", DenseMatrix(1, 1));
  st2.v.emplace_back("W", DenseMatrix(1, 1));
  adam_step(decayed, zero, st2, 0.01, 0.1, 1);
  CHECK(decayed.find("W").at(0, 0) < 0.5);
  CHECK(decayed.find("W").at(0, 0) > 0.4);

  // Constant gradient: step magnitude approaches lr.
  auto drift = params;
  AdamState st3;
  st3.m.emplace_back("W", DenseMatrix(1, 1));
  st3.v.emplace_back("W", DenseMatrix(1, 1));
  Gradients g;
  g.emplace_back("W", DenseMatrix(1, 1));
  g[0].second.at(0, 0) = 0.37;
  double prev = drift.find("W").at(0, 0);
  double step = 0.0;
  for (int t = 1; t <= 300; ++t) {
    adam_step(drift, g, st3, 0.01, 0.0, t);
    step = prev - drift.find("W").at(0, 0);
    prev = drift.find("W").at(0, 0);
  }
  CHECK(step == doctest::Approx(0.01).epsilon(1e-3));

  // 3-step hand trace on a scalar with gradient sequence 1, -2, 0.5.
  double theta = 1.0, m = 0.0, v = 0.0;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8, lr = 0.05;
  auto hand = params;
  hand.find("W").at(0, 0) = 1.0;
  AdamState st4;
  st4.m.emplace_back("W", DenseMatrix(1, 1));
  st4.v.emplace_back("W", DenseMatrix(1, 1));
  double gs[] = {1.0, -2.0, 0.5};
  for (int t = 1; t <= 3; ++t) {
    double gv = gs[t - 1];
    m = b1 * m + (1 - b1) * gv;
    v = b2 * v + (1 - b2) * gv * gv;
    double mhat = m / (1 - std::pow(b1, t));
    double vhat = v / (1 - std::pow(b2, t));
    theta -= lr * mhat / (std::sqrt(vhat) + eps);
    g[0].second.at(0, 0) = gv;
    adam_step(hand, g, st4, lr, 0.0, t);
    CHECK(hand.find("W").at(0, 0) == doctest::Approx(theta).epsilon(1e-14));
  }
}

TEST_CASE("train: loss trace identity and determinism") {
  std::mt19937_64 rng(5);
  auto g = random_bundle(rng, 24, 5, 2);
  TrainConfig cfg;
  cfg.method = TrainMethod::sagif;
  cfg.arch = Arch::sagif_gcn;
  cfg.epochs = 25;
  cfg.k = 3;
  cfg.d_sim = 4;
  cfg.hidden = 8;
  cfg.alpha = 0.7;
  cfg.seed = 9;
  auto r1 = train(g, cfg);
  auto r2 = train(g, cfg);
  REQUIRE(r1.trace.size() == 25);
  for (const auto& e : r1.trace)
    CHECK(e.total == doctest::Approx(e.task + 0.7 * e.similarity).epsilon(1e-10));
  // Bit-identical repeat.
  for (std::size_t i = 0; i < r1.params.params.size(); ++i)
    CHECK(r1.params.params[i].second.data == r2.params.params[i].second.data);
  for (std::size_t i = 0; i < r1.trace.size(); ++i)
    CHECK(r1.trace[i].total == r2.trace[i].total);
  CHECK(r1.best_epoch == r2.best_epoch);
}

TEST_CASE("train: alpha = 0 records similarity without affecting updates") {
  std::mt19937_64 rng(6);
  auto g = random_bundle(rng, 24, 5, 2);
  TrainConfig cfg;
  cfg.method = TrainMethod::sagif;
  cfg.arch = Arch::sagif_sgc;
  cfg.epochs = 20;
  cfg.k = 3;
  cfg.d_sim = 4;
  cfg.alpha = 0.0;
  cfg.seed = 2;
  auto with_ls = train(g, cfg);
  auto silent_cfg = cfg;
  silent_cfg.record_similarity = false;
  auto without_ls = train(g, silent_cfg);
  REQUIRE(with_ls.trace.size() == without_ls.trace.size());
  for (std::size_t i = 0; i < with_ls.trace.size(); ++i) {
    CHECK(with_ls.trace[i].task == without_ls.trace[i].task);
    CHECK(without_ls.trace[i].similarity == 0.0);
    CHECK(with_ls.trace[i].similarity != 0.0);
  }
  for (std::size_t i = 0; i < with_ls.params.params.size(); ++i)
    CHECK(with_ls.params.params[i].second.data == without_ls.params.params[i].second.data);
}

TEST_CASE("train: vanilla GCN reaches 0.9 test accuracy on an easy SBM") {
  SbmSpec spec;
  spec.blocks = 3;
  spec.nodes_per_block = 20;
  spec.p_intra = 0.3;
  spec.p_inter = 0.02;
  spec.noise = 0.05;
  // Seed chosen so the 5% train split covers all three classes.
  auto g = generate_sbm(spec, 2);
  TrainConfig cfg;
  cfg.method = TrainMethod::vanilla;
  cfg.arch = Arch::gcn2;
  cfg.epochs = 500;
  cfg.seed = 1;
  auto r = train(g, cfg);
  auto norm_adj = normalize_adjacency(g.adjacency, true);
  auto trace = forward(r.params, norm_adj, g.features, nullptr);
  CHECK(accuracy(trace.logits, g.labels, g.test_idx) >= 0.9);
}

TEST_CASE("train: inform method runs and penalizes dissimilar outputs") {
  std::mt19937_64 rng(7);
  auto g = random_bundle(rng, 20, 4, 2);
  TrainConfig cfg;
  cfg.method = TrainMethod::inform;
  cfg.arch = Arch::sgc1;
  cfg.epochs = 15;
  cfg.k = 3;
  cfg.inform_alpha = 1e-4;
  cfg.seed = 3;
  auto r = train(g, cfg);
  REQUIRE(r.trace.size() == 15);
  for (const auto& e : r.trace) {
    CHECK(std::isfinite(e.total));
    CHECK(e.similarity >= -1e-12);  // the quadratic form is non-negative
    CHECK(e.total == doctest::Approx(e.task + 1e-4 * e.similarity).epsilon(1e-10));
  }
}

TEST_CASE("train is invariant to node relabeling") {
  std::mt19937_64 rng(8);
  auto g = random_bundle(rng, 18, 4, 2);
  TrainConfig cfg;
  cfg.method = TrainMethod::sagif;
  cfg.arch = Arch::sagif_sgc;
  cfg.epochs = 30;
  cfg.k = 3;
  cfg.d_sim = 3;
  cfg.seed = 4;
  auto base = train(g, cfg);

  // Permute every node-indexed structure consistently.
  std::vector<int> perm(g.n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);  // perm[old] = new
  GraphBundle pg;
  pg.n = g.n;
  pg.m = g.m;
  pg.num_classes = g.num_classes;
  std::vector<std::tuple<int, int, double>> t;
  for (int i = 0; i < g.n; ++i)
    for (int e = g.adjacency.offsets[i]; e < g.adjacency.offsets[i + 1]; ++e)
      t.emplace_back(perm[i], perm[g.adjacency.indices[e]], 1.0);
  pg.adjacency = SparseMatrix::from_triplets(g.n, g.n, std::move(t));
  pg.features = DenseMatrix(g.n, g.features.cols);
  pg.labels.resize(g.n);
  for (int i = 0; i < g.n; ++i) {
    pg.labels[perm[i]] = g.labels[i];
    for (int c = 0; c < g.features.cols; ++c) pg.features.at(perm[i], c) = g.features.at(i, c);
  }
  for (int i : g.train_idx) pg.train_idx.push_back(perm[i]);
  for (int i : g.val_idx) pg.val_idx.push_back(perm[i]);
  for (int i : g.test_idx) pg.test_idx.push_back(perm[i]);
  std::sort(pg.train_idx.begin(), pg.train_idx.end());
  std::sort(pg.val_idx.begin(), pg.val_idx.end());
  std::sort(pg.test_idx.begin(), pg.test_idx.end());

  auto permuted = train(pg, cfg);
  for (std::size_t i = 0; i < base.trace.size(); ++i)
    CHECK(base.trace[i].total == doctest::Approx(permuted.trace[i].total).epsilon(1e-9));
  auto norm_a = normalize_adjacency(g.adjacency, true);
  auto norm_b = normalize_adjacency(pg.adjacency, true);
  FusionConfig fc{cfg.fusion, cfg.k, cfg.lambda, cfg.d_sim};
  auto enc_a = laplacian_encoding(build_knn_graph(build_oracle(g, fc)), cfg.d_sim, cfg.k);
  auto enc_b = laplacian_encoding(build_knn_graph(build_oracle(pg, fc)), cfg.d_sim, cfg.k);
  auto logit_a = forward(base.params, norm_a, g.features, &enc_a.p0).logits;
  auto logit_b = forward(permuted.params, norm_b, pg.features, &enc_b.p0).logits;
  for (int i = 0; i < g.n; ++i)
    for (int c = 0; c < logit_a.cols; ++c)
      CHECK(logit_a.at(i, c) == doctest::Approx(logit_b.at(perm[i], c)).epsilon(1e-9));
}

TEST_CASE("train config validation and non-finite detection") {
  std::mt19937_64 rng(9);
  auto g = random_bundle(rng, 12, 3, 2);
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(train(g, cfg), ValidationError);
  cfg.epochs = 5;
  cfg.lr = -0.1;
  CHECK_THROWS_AS(train(g, cfg), ValidationError);
  cfg.lr = 1e200;  // absurd rate overflows the two-layer product
  cfg.epochs = 10;
  CHECK_THROWS_AS(train(g, cfg), NumericalError);
}

TEST_CASE("early stopping honors patience") {
  std::mt19937_64 rng(10);
  auto g = random_bundle(rng, 24, 4, 2);
  TrainConfig cfg;
  cfg.method = TrainMethod::vanilla;
  cfg.arch = Arch::sgc1;
  cfg.epochs = 400;
  cfg.patience = 5;
  cfg.seed = 11;
  auto r = train(g, cfg);
  CHECK(r.trace.size() <= 400);
  CHECK(r.best_epoch <= static_cast<int>(r.trace.size()));
}
