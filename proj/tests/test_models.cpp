#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sagif/errors.hpp"
#include "sagif/model.hpp"
#include "test_util.hpp"

using namespace sagif;

namespace {

DenseMatrix ref_relu(const DenseMatrix& m) {
  DenseMatrix out = m;
  for (double& v : out.data) v = std::max(0.0, v);
  return out;
}

DenseMatrix ref_affine(const DenseMatrix& x, const DenseMatrix& w, const DenseMatrix& b) {
  auto y = testutil::ref_matmul(x, w);
  for (int i = 0; i < y.rows; ++i)
    for (int j = 0; j < y.cols; ++j) y.at(i, j) += b.at(0, j);
  return y;
}

/// Linear-combination scalar loss so finite differences can probe both
/// upstream gradients at once.
double probe_loss(const ForwardTrace& t, const DenseMatrix& c, const DenseMatrix* e) {
  double loss = 0.0;
  for (std::size_t i = 0; i < t.logits.data.size(); ++i) loss += c.data[i] * t.logits.data[i];
  if (e != nullptr)
    for (std::size_t i = 0; i < t.sim_repr.data.size(); ++i)
      loss += e->data[i] * t.sim_repr.data[i];
  return loss;
}

void check_gradients(Arch arch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int n = 8, d = 4, ds = arch_is_sagif(arch) ? 2 : 0, c = 3;
  ModelDescriptor desc{arch, d, 5, ds, c};
  auto params = init_params(desc, seed);
  auto adj = testutil::random_adjacency(rng, n, 0.4);
  auto norm_adj = normalize_adjacency(adj, true);
  auto x = testutil::random_dense(rng, n, d);
  auto p0 = testutil::random_dense(rng, n, ds);
  const DenseMatrix* p0p = arch_is_sagif(arch) ? &p0 : nullptr;

  auto grad_logits = testutil::random_dense(rng, n, c);
  DenseMatrix grad_p = testutil::random_dense(rng, n, ds);
  const DenseMatrix* gpp = arch_is_sagif(arch) ? &grad_p : nullptr;

  auto trace = forward(params, norm_adj, x, p0p);
  auto grads = backward(trace, params, norm_adj, x, p0p, grad_logits, gpp);
  REQUIRE(grads.size() == params.params.size());

  const double h = 1e-5;
  for (std::size_t pi = 0; pi < params.params.size(); ++pi) {
    CHECK(grads[pi].first == params.params[pi].first);
    auto& theta = params.params[pi].second;
    for (std::size_t e = 0; e < theta.data.size(); ++e) {
      double orig = theta.data[e];
      theta.data[e] = orig + h;
      double up = probe_loss(forward(params, norm_adj, x, p0p), grad_logits, gpp);
      theta.data[e] = orig - h;
      double dn = probe_loss(forward(params, norm_adj, x, p0p), grad_logits, gpp);
      theta.data[e] = orig;
      double fd = (up - dn) / (2.0 * h);
      double got = grads[pi].second.data[e];
      double denom = std::max({std::abs(fd), std::abs(got), 1e-8});
      CHECK(std::abs(fd - got) / denom <= 1e-4);
    }
  }
}

}  // namespace

TEST_CASE("init_params: determinism and shapes") {
  ModelDescriptor gcn{Arch::gcn2, 4, 3, 0, 2};
  auto a = init_params(gcn, 9);
  auto b = init_params(gcn, 9);
  for (std::size_t i = 0; i < a.params.size(); ++i)
    CHECK(a.params[i].second.data == b.params[i].second.data);
  CHECK(a.find("W1").rows == 4);
  CHECK(a.find("W1").cols == 3);
  CHECK(a.find("W2").rows == 3);
  CHECK(a.find("W2").cols == 2);
  for (double v : a.find("b1").data) CHECK(v == 0.0);

  // Glorot bound |w| <= sqrt(6 / (fan_in + fan_out)).
  double bound = std::sqrt(6.0 / (4 + 3));
  for (double v : a.find("W1").data) CHECK(std::abs(v) <= bound);

  ModelDescriptor ssgc{Arch::sagif_sgc, 4, 16, 2, 3};
  auto p = init_params(ssgc, 1);
  CHECK(p.find("W").rows == 6);  // head input width d + d_sim
  CHECK(p.find("W").cols == 3);
  CHECK(p.find("Ws").rows == 2);
  CHECK(p.find("Ws").cols == 2);

  ModelDescriptor sgcn{Arch::sagif_gcn, 4, 16, 2, 3};
  auto q = init_params(sgcn, 1);
  CHECK(q.find("W1").rows == 6);
  CHECK(q.find("W1").cols == 16);
  CHECK(q.find("W2").rows == 18);
  CHECK(q.find("W2").cols == 3);
}

TEST_CASE("forward_vanilla_gcn: zero weights, single node, dense reference") {
  ModelDescriptor desc{Arch::gcn2, 3, 4, 0, 2};
  auto params = init_params(desc, 0);
  std::mt19937_64 rng(14);
  auto adj = testutil::random_adjacency(rng, 5, 0.5);
  auto norm_adj = normalize_adjacency(adj, true);
  auto x = testutil::random_dense(rng, 5, 3);

  auto zeroed = params;
  for (auto& [name, w] : zeroed.params)
    for (double& v : w.data) v = 0.0;
  for (double v : forward_vanilla_gcn(zeroed, norm_adj, x).logits.data) CHECK(v == 0.0);

  // Single self-looped node: logits = relu(x W1 + b1) W2 + b2.
  SparseMatrix one(1, 1);
  auto one_norm = normalize_adjacency(one, true);
  DenseMatrix x1 = testutil::random_dense(rng, 1, 3);
  auto got1 = forward_vanilla_gcn(params, one_norm, x1).logits;
  auto want1 = ref_affine(ref_relu(ref_affine(x1, params.find("W1"), params.find("b1"))),
                          params.find("W2"), params.find("b2"));
  CHECK(testutil::max_abs_diff(got1, want1) < 1e-12);

  // Straight-line dense reference on the 5-node instance.
  auto a_dense = to_dense(norm_adj);
  auto want = ref_affine(
      testutil::ref_matmul(a_dense, ref_relu(ref_affine(testutil::ref_matmul(a_dense, x),
                                                        params.find("W1"), params.find("b1")))),
      params.find("W2"), params.find("b2"));
  CHECK(testutil::max_abs_diff(forward_vanilla_gcn(params, norm_adj, x).logits, want) < 1e-12);
}

TEST_CASE("forward_vanilla_sgc: zero weights, single node, dense reference") {
  ModelDescriptor desc{Arch::sgc1, 3, 16, 0, 2};
  auto params = init_params(desc, 2);
  std::mt19937_64 rng(15);
  auto adj = testutil::random_adjacency(rng, 5, 0.5);
  auto norm_adj = normalize_adjacency(adj, true);
  auto x = testutil::random_dense(rng, 5, 3);

  auto zeroed = params;
  for (auto& [name, w] : zeroed.params)
    for (double& v : w.data) v = 0.0;
  for (double v : forward_vanilla_sgc(zeroed, norm_adj, x).logits.data) CHECK(v == 0.0);

  SparseMatrix one(1, 1);
  DenseMatrix x1 = testutil::random_dense(rng, 1, 3);
  auto got1 = forward_vanilla_sgc(params, normalize_adjacency(one, true), x1).logits;
  CHECK(testutil::max_abs_diff(got1, ref_affine(x1, params.find("W"), params.find("b"))) < 1e-12);

  auto want = ref_affine(testutil::ref_matmul(to_dense(norm_adj), x), params.find("W"),
                         params.find("b"));
  CHECK(testutil::max_abs_diff(forward_vanilla_sgc(params, norm_adj, x).logits, want) < 1e-12);
}

TEST_CASE("forward_sagif shapes and dense reference") {
  const int n = 6, d = 4, ds = 2, c = 3;
  ModelDescriptor desc{Arch::sagif_gcn, d, 16, ds, c};
  auto params = init_params(desc, 3);
  CHECK(params.find("W1").rows == d + ds);
  CHECK(params.find("Ws").rows == ds);
  CHECK(params.find("W2").rows == 16 + ds);
  CHECK(params.find("W2").cols == c);

  std::mt19937_64 rng(16);
  auto adj = testutil::random_adjacency(rng, n, 0.5);
  auto norm_adj = normalize_adjacency(adj, true);
  auto a_dense = to_dense(norm_adj);
  auto x = testutil::random_dense(rng, n, d);
  auto p0 = testutil::random_dense(rng, n, ds);

  auto trace = forward_sagif(params, norm_adj, x, p0);
  // Reference: h1 = relu(A [x, p0] W1 + b1), p1 = (A p0) Ws + bs,
  // logits = A [h1, p1] W2 + b2.
  auto h1 = ref_relu(ref_affine(testutil::ref_matmul(a_dense, hconcat(x, p0)), params.find("W1"),
                                params.find("b1")));
  auto p1 = ref_affine(testutil::ref_matmul(a_dense, p0), params.find("Ws"), params.find("bs"));
  auto want = ref_affine(testutil::ref_matmul(a_dense, hconcat(h1, p1)), params.find("W2"),
                         params.find("b2"));
  CHECK(testutil::max_abs_diff(trace.logits, want) < 1e-12);
  CHECK(testutil::max_abs_diff(trace.sim_repr, p1) < 1e-12);

  // sagif_sgc reference: logits = [A x, (A p0) Ws + bs] W + b.
  ModelDescriptor sdesc{Arch::sagif_sgc, d, 16, ds, c};
  auto sparams = init_params(sdesc, 3);
  auto strace = forward_sagif(sparams, norm_adj, x, p0);
  auto sp1 = ref_affine(testutil::ref_matmul(a_dense, p0), sparams.find("Ws"), sparams.find("bs"));
  auto swant = ref_affine(hconcat(testutil::ref_matmul(a_dense, x), sp1), sparams.find("W"),
                          sparams.find("b"));
  CHECK(testutil::max_abs_diff(strace.logits, swant) < 1e-12);
}

TEST_CASE("forward_sagif: zero p0 and zero similarity weights leave the head-p block inert") {
  const int n = 5, d = 3, ds = 2, c = 2;
  ModelDescriptor desc{Arch::sagif_gcn, d, 4, ds, c};
  auto params = init_params(desc, 7);
  for (double& v : params.find("Ws").data) v = 0.0;
  for (double& v : params.find("bs").data) v = 0.0;
  std::mt19937_64 rng(18);
  auto norm_adj = normalize_adjacency(testutil::random_adjacency(rng, n, 0.6), true);
  auto x = testutil::random_dense(rng, n, d);
  DenseMatrix p0(n, ds);  // zeros
  auto trace = forward_sagif(params, norm_adj, x, p0);

  // Vanilla model assembled from the h-block rows of W1 and W2.
  ModelDescriptor vdesc{Arch::gcn2, d, 4, 0, c};
  auto vparams = init_params(vdesc, 7);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < 4; ++j) vparams.find("W1").at(i, j) = params.find("W1").at(i, j);
  vparams.find("b1") = params.find("b1");
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < c; ++j) vparams.find("W2").at(i, j) = params.find("W2").at(i, j);
  vparams.find("b2") = params.find("b2");
  auto vtrace = forward_vanilla_gcn(vparams, norm_adj, x);
  CHECK(testutil::max_abs_diff(trace.logits, vtrace.logits) < 1e-12);
}

TEST_CASE("sagif with d_sim = 0 degenerates to the vanilla forward bit-exactly") {
  std::mt19937_64 rng(19);
  auto norm_adj = normalize_adjacency(testutil::random_adjacency(rng, 7, 0.4), true);
  auto x = testutil::random_dense(rng, 7, 4);
  DenseMatrix p0(7, 0);

  ModelDescriptor sg{Arch::sagif_gcn, 4, 5, 0, 3};
  ModelDescriptor vg{Arch::gcn2, 4, 5, 0, 3};
  auto sp = init_params(sg, 123);
  auto vp = init_params(vg, 123);
  CHECK(forward_sagif(sp, norm_adj, x, p0).logits.data ==
        forward_vanilla_gcn(vp, norm_adj, x).logits.data);

  ModelDescriptor ss{Arch::sagif_sgc, 4, 16, 0, 3};
  ModelDescriptor vs{Arch::sgc1, 4, 16, 0, 3};
  CHECK(forward_sagif(init_params(ss, 123), norm_adj, x, p0).logits.data ==
        forward_vanilla_sgc(init_params(vs, 123), norm_adj, x).logits.data);
}

TEST_CASE("SGC forward is linear: f(2X) = 2 f(X) - f(0)") {
  std::mt19937_64 rng(20);
  ModelDescriptor desc{Arch::sgc1, 4, 16, 0, 3};
  auto params = init_params(desc, 4);
  auto norm_adj = normalize_adjacency(testutil::random_adjacency(rng, 6, 0.5), true);
  auto x = testutil::random_dense(rng, 6, 4);
  DenseMatrix x2 = x;
  for (double& v : x2.data) v *= 2.0;
  DenseMatrix zero(6, 4);
  auto f = [&](const DenseMatrix& in) { return forward_vanilla_sgc(params, norm_adj, in).logits; };
  auto lhs = f(x2);
  auto fx = f(x);
  auto f0 = f(zero);
  for (std::size_t i = 0; i < lhs.data.size(); ++i)
    CHECK(lhs.data[i] == doctest::Approx(2.0 * fx.data[i] - f0.data[i]).epsilon(1e-10));
}

TEST_CASE("backward: zero upstream gradients give zero parameter gradients") {
  std::mt19937_64 rng(22);
  ModelDescriptor desc{Arch::sagif_gcn, 3, 4, 2, 2};
  auto params = init_params(desc, 5);
  auto norm_adj = normalize_adjacency(testutil::random_adjacency(rng, 5, 0.5), true);
  auto x = testutil::random_dense(rng, 5, 3);
  auto p0 = testutil::random_dense(rng, 5, 2);
  auto trace = forward_sagif(params, norm_adj, x, p0);
  DenseMatrix zc(5, 2), zp(5, 2);
  auto grads = backward(trace, params, norm_adj, x, &p0, zc, &zp);
  for (const auto& [name, g] : grads)
    for (double v : g.data) CHECK(v == 0.0);
}

TEST_CASE("gradient check gcn2") { check_gradients(Arch::gcn2, 101); }
TEST_CASE("gradient check sgc1") { check_gradients(Arch::sgc1, 102); }
TEST_CASE("gradient check sagif_gcn") { check_gradients(Arch::sagif_gcn, 103); }
TEST_CASE("gradient check sagif_sgc") { check_gradients(Arch::sagif_sgc, 104); }

TEST_CASE("sgc1 squared-error gradient matches the closed form") {
  // loss = ||A X W + b - T||^2 / n; dW = 2/n * X^T A^T (A X W + b - T).
  std::mt19937_64 rng(24);
  const int n = 6, d = 3, c = 2;
  ModelDescriptor desc{Arch::sgc1, d, 16, 0, c};
  auto params = init_params(desc, 6);
  auto norm_adj = normalize_adjacency(testutil::random_adjacency(rng, n, 0.5), true);
  auto a_dense = to_dense(norm_adj);
  auto x = testutil::random_dense(rng, n, d);
  auto t = testutil::random_dense(rng, n, c);

  auto trace = forward_vanilla_sgc(params, norm_adj, x);
  DenseMatrix grad_logits(n, c);
  for (std::size_t i = 0; i < grad_logits.data.size(); ++i)
    grad_logits.data[i] = 2.0 / n * (trace.logits.data[i] - t.data[i]);
  auto grads = backward(trace, params, norm_adj, x, nullptr, grad_logits, nullptr);

  auto ax = testutil::ref_matmul(a_dense, x);
  auto resid = trace.logits;
  for (std::size_t i = 0; i < resid.data.size(); ++i)
    resid.data[i] = 2.0 / n * (resid.data[i] - t.data[i]);
  auto want = testutil::ref_matmul(transpose(ax), resid);
  CHECK(testutil::max_abs_diff(grads[0].second, want) < 1e-10);
}

TEST_CASE("ReLU GCN logits are piecewise linear in X away from kinks") {
  std::mt19937_64 rng(26);
  ModelDescriptor desc{Arch::gcn2, 3, 4, 0, 2};
  auto params = init_params(desc, 8);
  auto norm_adj = normalize_adjacency(testutil::random_adjacency(rng, 5, 0.5), true);
  auto x = testutil::random_dense(rng, 5, 3);
  auto dir = testutil::random_dense(rng, 5, 3);
  auto f = [&](double t) {
    DenseMatrix xt = x;
    for (std::size_t i = 0; i < xt.data.size(); ++i) xt.data[i] += t * dir.data[i];
    return forward_vanilla_gcn(params, norm_adj, xt).logits;
  };
  // Two-sided secants with different step sizes agree when no kink is crossed.
  const double h1 = 1e-6, h2 = 2e-6;
  auto up1 = f(h1), dn1 = f(-h1), up2 = f(h2), dn2 = f(-h2);
  for (std::size_t i = 0; i < up1.data.size(); ++i) {
    double s1 = (up1.data[i] - dn1.data[i]) / (2 * h1);
    double s2 = (up2.data[i] - dn2.data[i]) / (2 * h2);
    CHECK(s1 == doctest::Approx(s2).epsilon(1e-4));
  }
}

TEST_CASE("forward/backward reject mismatched inputs") {
  ModelDescriptor desc{Arch::sagif_gcn, 3, 4, 2, 2};
  auto params = init_params(desc, 1);
  std::mt19937_64 rng(27);
  auto norm_adj = normalize_adjacency(testutil::random_adjacency(rng, 5, 0.5), true);
  auto x = testutil::random_dense(rng, 5, 3);
  CHECK_THROWS_AS(forward(params, norm_adj, x, nullptr), ValidationError);
  DenseMatrix short_p0(3, 2);
  CHECK_THROWS_AS(forward_sagif(params, norm_adj, x, short_p0), ValidationError);
}
