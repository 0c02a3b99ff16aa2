#include "sagif/model.hpp"

#include <cmath>
#include <cstddef>

#include "sagif/errors.hpp"

namespace sagif {

Arch arch_from_string(const std::string& s) {
  if (s == "gcn2") return Arch::gcn2;
  if (s == "sgc1") return Arch::sgc1;
  if (s == "sagif_gcn") return Arch::sagif_gcn;
  if (s == "sagif_sgc") return Arch::sagif_sgc;
  throw ValidationError("unknown architecture descriptor: " + s);
}

std::string arch_to_string(Arch a) {
  switch (a) {
    case Arch::gcn2: return "gcn2";
    case Arch::sgc1: return "sgc1";
    case Arch::sagif_gcn: return "sagif_gcn";
    case Arch::sagif_sgc: return "sagif_sgc";
  }
  throw ValidationError("bad architecture enum");
}

bool arch_is_sagif(Arch a) { return a == Arch::sagif_gcn || a == Arch::sagif_sgc; }

DenseMatrix& ModelParams::find(const std::string& name) {
  for (auto& [n, m] : params)
    if (n == name) return m;
  throw ValidationError("parameter not found: " + name);
}

const DenseMatrix& ModelParams::find(const std::string& name) const {
  for (const auto& [n, m] : params)
    if (n == name) return m;
  throw ValidationError("parameter not found: " + name);
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

DenseMatrix glorot(int rows, int cols, std::uint64_t& state) {
  DenseMatrix w(rows, cols);
  double a = rows + cols > 0 ? std::sqrt(6.0 / (rows + cols)) : 0.0;
  for (double& v : w.data) {
    double u = static_cast<double>(splitmix64(state) >> 11) * (1.0 / 9007199254740992.0);
    v = (2.0 * u - 1.0) * a;
  }
  return w;
}

DenseMatrix relu(const DenseMatrix& z) {
  DenseMatrix h = z;
  for (double& v : h.data)
    if (v < 0.0) v = 0.0;
  return h;
}

// Affine map rows(in) * w + bias.
DenseMatrix affine(const DenseMatrix& in, const DenseMatrix& w, const DenseMatrix& b) {
  DenseMatrix out = matmul(in, w);
  add_row_vector(out, b);
  return out;
}

DenseMatrix right_block(const DenseMatrix& m, int left_cols) {
  DenseMatrix out(m.rows, m.cols - left_cols);
  for (int i = 0; i < m.rows; ++i)
    for (int j = left_cols; j < m.cols; ++j) out.at(i, j - left_cols) = m.at(i, j);
  return out;
}

DenseMatrix left_block(const DenseMatrix& m, int left_cols) {
  DenseMatrix out(m.rows, left_cols);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < left_cols; ++j) out.at(i, j) = m.at(i, j);
  return out;
}

DenseMatrix row_vec(const std::vector<double>& v) {
  DenseMatrix m(1, static_cast<int>(v.size()));
  m.data = v;
  return m;
}

}  // namespace

ModelParams init_params(const ModelDescriptor& desc, std::uint64_t seed) {
  if (desc.in_dim < 1 || desc.classes < 2)
    throw ValidationError("init_params: bad descriptor dimensions");
  if (desc.d_sim < 0) throw ValidationError("init_params: negative d_sim");
  std::uint64_t state = seed;
  ModelParams p;
  p.desc = desc;
  const int d = desc.in_dim, h = desc.hidden, ds = desc.d_sim, c = desc.classes;
  switch (desc.arch) {
    case Arch::gcn2:
      p.params.emplace_back("W1", glorot(d, h, state));
      p.params.emplace_back("b1", DenseMatrix(1, h));
      p.params.emplace_back("W2", glorot(h, c, state));
      p.params.emplace_back("b2", DenseMatrix(1, c));
      break;
    case Arch::sgc1:
      p.params.emplace_back("W", glorot(d, c, state));
      p.params.emplace_back("b", DenseMatrix(1, c));
      break;
    case Arch::sagif_gcn:
      p.params.emplace_back("W1", glorot(d + ds, h, state));
      p.params.emplace_back("b1", DenseMatrix(1, h));
      p.params.emplace_back("Ws", glorot(ds, ds, state));
      p.params.emplace_back("bs", DenseMatrix(1, ds));
      p.params.emplace_back("W2", glorot(h + ds, c, state));
      p.params.emplace_back("b2", DenseMatrix(1, c));
      break;
    case Arch::sagif_sgc:
      p.params.emplace_back("Ws", glorot(ds, ds, state));
      p.params.emplace_back("bs", DenseMatrix(1, ds));
      p.params.emplace_back("W", glorot(d + ds, c, state));
      p.params.emplace_back("b", DenseMatrix(1, c));
      break;
  }
  return p;
}

ForwardTrace forward_vanilla_gcn(const ModelParams& p, const SparseMatrix& norm_adj,
                                 const DenseMatrix& x) {
  ForwardTrace t;
  t.arch = Arch::gcn2;
  t.ax = sparse_dense_multiply(norm_adj, x);
  t.z1 = affine(t.ax, p.find("W1"), p.find("b1"));
  DenseMatrix h1 = relu(t.z1);
  t.ah1 = sparse_dense_multiply(norm_adj, h1);
  t.logits = affine(t.ah1, p.find("W2"), p.find("b2"));
  return t;
}

ForwardTrace forward_vanilla_sgc(const ModelParams& p, const SparseMatrix& norm_adj,
                                 const DenseMatrix& x) {
  ForwardTrace t;
  t.arch = Arch::sgc1;
  t.ax = sparse_dense_multiply(norm_adj, x);
  t.logits = affine(t.ax, p.find("W"), p.find("b"));
  return t;
}

ForwardTrace forward_sagif(const ModelParams& p, const SparseMatrix& norm_adj,
                           const DenseMatrix& x, const DenseMatrix& p0) {
  if (p0.rows != x.rows && p.desc.d_sim > 0)
    throw ValidationError("forward_sagif: p0 row count mismatch");
  ForwardTrace t;
  t.arch = p.desc.arch;
  if (p.desc.arch == Arch::sagif_gcn) {
    DenseMatrix u = hconcat(x, p0);
    t.ax = sparse_dense_multiply(norm_adj, u);
    t.z1 = affine(t.ax, p.find("W1"), p.find("b1"));
    DenseMatrix h1 = relu(t.z1);
    t.ap = sparse_dense_multiply(norm_adj, p0);
    t.sim_repr = affine(t.ap, p.find("Ws"), p.find("bs"));
    t.cat = hconcat(h1, t.sim_repr);
    t.ah1 = sparse_dense_multiply(norm_adj, t.cat);
    t.logits = affine(t.ah1, p.find("W2"), p.find("b2"));
  } else if (p.desc.arch == Arch::sagif_sgc) {
    t.ax = sparse_dense_multiply(norm_adj, x);
    t.ap = sparse_dense_multiply(norm_adj, p0);
    t.sim_repr = affine(t.ap, p.find("Ws"), p.find("bs"));
    t.cat = hconcat(t.ax, t.sim_repr);
    t.logits = affine(t.cat, p.find("W"), p.find("b"));
  } else {
    throw ValidationError("forward_sagif: descriptor is not a sagif architecture");
  }
  return t;
}

ForwardTrace forward(const ModelParams& p, const SparseMatrix& norm_adj, const DenseMatrix& x,
                     const DenseMatrix* p0) {
  switch (p.desc.arch) {
    case Arch::gcn2: return forward_vanilla_gcn(p, norm_adj, x);
    case Arch::sgc1: return forward_vanilla_sgc(p, norm_adj, x);
    default: break;
  }
  if (p0 == nullptr) throw ValidationError("forward: sagif architecture needs p0");
  return forward_sagif(p, norm_adj, x, *p0);
}

Gradients backward(const ForwardTrace& trace, const ModelParams& p, const SparseMatrix& norm_adj,
                   const DenseMatrix& x, const DenseMatrix* p0, const DenseMatrix& grad_logits,
                   const DenseMatrix* grad_p) {
  if (trace.arch != p.desc.arch) throw ValidationError("backward: trace/params mismatch");
  Gradients g;
  const int ds = p.desc.d_sim;
  // Uses norm_adj^T = norm_adj throughout (symmetric normalization).
  switch (trace.arch) {
    case Arch::gcn2: {
      g.emplace_back("W1", DenseMatrix());
      g.emplace_back("b1", DenseMatrix());
      g.emplace_back("W2", matmul_tn(trace.ah1, grad_logits));
      g.emplace_back("b2", row_vec(column_sums(grad_logits)));
      DenseMatrix gh1 = matmul_nt(sparse_dense_multiply(norm_adj, grad_logits), p.find("W2"));
      for (std::size_t i = 0; i < gh1.data.size(); ++i)
        if (trace.z1.data[i] <= 0.0) gh1.data[i] = 0.0;
      g[0].second = matmul_tn(trace.ax, gh1);
      g[1].second = row_vec(column_sums(gh1));
      break;
    }
    case Arch::sgc1: {
      g.emplace_back("W", matmul_tn(trace.ax, grad_logits));
      g.emplace_back("b", row_vec(column_sums(grad_logits)));
      break;
    }
    case Arch::sagif_gcn: {
      (void)x;
      (void)p0;
      DenseMatrix gcat = matmul_nt(sparse_dense_multiply(norm_adj, grad_logits), p.find("W2"));
      const int h = p.desc.hidden;
      DenseMatrix gh1 = left_block(gcat, h);
      DenseMatrix gp1 = right_block(gcat, h);
      if (grad_p != nullptr && ds > 0)
        for (std::size_t i = 0; i < gp1.data.size(); ++i) gp1.data[i] += grad_p->data[i];
      for (std::size_t i = 0; i < gh1.data.size(); ++i)
        if (trace.z1.data[i] <= 0.0) gh1.data[i] = 0.0;
      g.emplace_back("W1", matmul_tn(trace.ax, gh1));
      g.emplace_back("b1", row_vec(column_sums(gh1)));
      g.emplace_back("Ws", matmul_tn(trace.ap, gp1));
      g.emplace_back("bs", row_vec(column_sums(gp1)));
      g.emplace_back("W2", matmul_tn(trace.ah1, grad_logits));
      g.emplace_back("b2", row_vec(column_sums(grad_logits)));
      break;
    }
    case Arch::sagif_sgc: {
      DenseMatrix gcat = matmul_nt(grad_logits, p.find("W"));
      const int d = trace.ax.cols;
      DenseMatrix gp1 = right_block(gcat, d);
      if (grad_p != nullptr && ds > 0)
        for (std::size_t i = 0; i < gp1.data.size(); ++i) gp1.data[i] += grad_p->data[i];
      g.emplace_back("Ws", matmul_tn(trace.ap, gp1));
      g.emplace_back("bs", row_vec(column_sums(gp1)));
      g.emplace_back("W", matmul_tn(trace.cat, grad_logits));
      g.emplace_back("b", row_vec(column_sums(grad_logits)));
      break;
    }
  }
  return g;
}

}  // namespace sagif
