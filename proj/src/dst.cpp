#include "dgp/dst.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dgp/kernels.hpp"

namespace dgp {

void NodeMatrix::softmax_row(int i, std::span<double> out) const {
  std::span<const double> in = row(i);
  DGP_CHECK(out.size() == in.size(), "softmax_row: size mismatch");
  double mx = in[0];
  for (double v : in) mx = std::max(mx, v);
  double sum = 0.0;
  for (std::size_t j = 0; j < in.size(); ++j) {
    out[j] = std::exp(in[j] - mx);
    sum += out[j];
  }
  for (std::size_t j = 0; j < in.size(); ++j) out[j] /= sum;
}

AdjacencyMatrix::AdjacencyMatrix(const SymbolicTree& t, double init_logit)
    : root_(t.root()),
      logits_(static_cast<std::size_t>(t.size()), init_logit) {
  logits_[static_cast<std::size_t>(root_)] = 0.0;  // no parent edge
}

double AdjacencyMatrix::logit(int child) const {
  DGP_CHECK(has_edge(child), "adjacency: root has no parent edge");
  return logits_[static_cast<std::size_t>(child)];
}

void AdjacencyMatrix::set_logit(int child, double v) {
  DGP_CHECK(has_edge(child), "adjacency: root has no parent edge");
  logits_[static_cast<std::size_t>(child)] = v;
}

double AdjacencyMatrix::strength(int child) const { return sigmoid(logit(child)); }

double AdjacencyMatrix::strength_between(int child, int parent,
                                         const SymbolicTree& t) const {
  if (child == root_ || t.node(child).parent != parent) return 0.0;
  return strength(child);
}

DiffSymbolicTree::DiffSymbolicTree(SymbolicTree tree, PrimitiveSet ps,
                                   const InitConfig& cfg)
    : tree_(tree.normalized()),
      ps_(std::move(ps)),
      scale_binary_inputs_(cfg.scale_binary_inputs) {
  const int k = tree_.size();
  const int l = ps_.size();
  nm_ = NodeMatrix(k, l);
  for (int i = 0; i < k; ++i) {
    int col = ps_.column_of(tree_.node(i).prim);
    DGP_CHECK(col >= 0, "relax: tree primitive not in the primitive set");
    nm_.row(i)[static_cast<std::size_t>(col)] = cfg.hot_logit;
  }
  adj_ = AdjacencyMatrix(tree_, cfg.edge_logit);
  auto po = tree_.postorder();
  eval_order_.assign(po.begin(), po.end());
}

DiffSymbolicTree relax(const SymbolicTree& t, const PrimitiveSet& ps,
                       const InitConfig& cfg) {
  return DiffSymbolicTree(t, ps, cfg);
}

namespace {

// Largest and second-largest terminal-column weights; ties resolved toward
// the lower column. With a single terminal both picks coincide.
void leaf_phantom_inputs(const PrimitiveSet& ps, const double* w, int* t1, int* t2) {
  std::span<const int> terms = ps.terminal_columns();
  int best = terms[0];
  for (int c : terms)
    if (w[c] > w[best]) best = c;
  *t1 = best;
  if (terms.size() == 1) {
    *t2 = best;
    return;
  }
  int second = -1;
  for (int c : terms) {
    if (c == best) continue;
    if (second < 0 || w[c] > w[second]) second = c;
  }
  *t2 = second;
}

inline double apply_unary(PrimKind k, double u) {
  switch (k) {
    case PrimKind::Sin: return std::sin(u);
    case PrimKind::Cos: return std::cos(u);
    case PrimKind::Exp: return kern::clamped_exp(u);
    case PrimKind::Log: return kern::protected_log(u);
    case PrimKind::Pass: return u;
    default: return 0.0;
  }
}

inline double apply_binary(PrimKind k, double a, double b) {
  switch (k) {
    case PrimKind::Add: return a + b;
    case PrimKind::Sub: return a - b;
    case PrimKind::Mul: return a * b;
    case PrimKind::Div: return kern::protected_div(a, b);
    default: return 0.0;
  }
}

}  // namespace

double mix_node(const DiffSymbolicTree& dst, int i, std::span<const double> w,
                std::span<const double> child_values, std::span<const double> x) {
  const PrimitiveSet& ps = dst.prims();
  DGP_CHECK(static_cast<int>(w.size()) == ps.size(), "mix_node: weight row size");
  const TreeNode& nd = dst.tree().node(i);
  const int a = nd.prim.arity();
  DGP_CHECK(static_cast<int>(child_values.size()) >= a, "mix_node: child values");
  double u = 0.0, b1 = 0.0, b2 = 0.0;
  if (a == 0) {
    int t1 = 0, t2 = 0;
    leaf_phantom_inputs(ps, w.data(), &t1, &t2);
    u = x[static_cast<std::size_t>(ps.at(t1).var)];
    b1 = u;
    b2 = x[static_cast<std::size_t>(ps.at(t2).var)];
  } else if (a == 1) {
    int c = nd.child[0];
    double su = dst.adjacency().strength(c) * child_values[0];
    u = su;
    double sb = dst.scale_binary_inputs() ? su : child_values[0];
    b1 = sb;
    b2 = sb;
  } else {
    int c1 = nd.child[0], c2 = nd.child[1];
    double a1 = dst.adjacency().strength(c1);
    double a2 = dst.adjacency().strength(c2);
    double su1 = a1 * child_values[0];
    double su2 = a2 * child_values[1];
    int slot = a1 > a2 ? 0 : a2 > a1 ? 1 : (c1 < c2 ? 0 : 1);
    u = slot == 0 ? su1 : su2;
    b1 = dst.scale_binary_inputs() ? su1 : child_values[0];
    b2 = dst.scale_binary_inputs() ? su2 : child_values[1];
  }
  double acc = 0.0;
  for (int j = 0; j < ps.size(); ++j) {
    const Primitive& p = ps.at(j);
    double contrib;
    switch (p.arity()) {
      case 0: contrib = x[static_cast<std::size_t>(p.var)]; break;
      case 1: contrib = apply_unary(p.kind, u); break;
      default: contrib = apply_binary(p.kind, b1, b2); break;
    }
    acc += w[static_cast<std::size_t>(j)] * contrib;
  }
  return acc;
}

double forward_one(const DiffSymbolicTree& dst, std::span<const double> x) {
  DGP_CHECK(static_cast<int>(x.size()) >= dst.prims().dims(),
            "forward_one: sample too short");
  std::vector<double> val(static_cast<std::size_t>(dst.node_count()), 0.0);
  std::vector<double> w(static_cast<std::size_t>(dst.prims().size()), 0.0);
  for (int i : dst.eval_order()) {
    dst.nodes().softmax_row(i, w);
    const TreeNode& nd = dst.tree().node(i);
    double cv[2] = {0.0, 0.0};
    for (int s = 0; s < nd.prim.arity(); ++s)
      cv[s] = val[static_cast<std::size_t>(nd.child[static_cast<std::size_t>(s)])];
    val[static_cast<std::size_t>(i)] =
        mix_node(dst, i, w, {cv, 2}, x);
  }
  return val[static_cast<std::size_t>(dst.tree().root())];
}

void forward_batch(const DiffSymbolicTree& dst, const ColMatrix& X,
                   ForwardTrace& tr) {
  const PrimitiveSet& ps = dst.prims();
  DGP_CHECK(static_cast<int>(X.cols) >= ps.dims(),
            "forward_batch: matrix has too few columns");
  const std::size_t n = X.rows;
  const int k = dst.node_count();
  const int l = ps.size();
  const auto& ops = kern::ops();

  tr.nodes = k;
  tr.prims = l;
  tr.batch = n;
  tr.r.assign(static_cast<std::size_t>(k) * n, 0.0);
  tr.W.resize(static_cast<std::size_t>(k) * static_cast<std::size_t>(l));
  tr.A.assign(static_cast<std::size_t>(k), 0.0);
  tr.t1.assign(static_cast<std::size_t>(k), -1);
  tr.t2.assign(static_cast<std::size_t>(k), -1);
  tr.unary_slot.assign(static_cast<std::size_t>(k), -1);
  tr.scratch.resize(3 * n);
  double* su1 = tr.scratch.data();
  double* su2 = su1 + n;
  double* val = su2 + n;

  for (int i = 0; i < k; ++i)
    if (dst.adjacency().has_edge(i))
      tr.A[static_cast<std::size_t>(i)] = dst.adjacency().strength(i);

  for (int i : dst.eval_order()) {
    double* w = tr.w_row(i);
    dst.nodes().softmax_row(i, {w, static_cast<std::size_t>(l)});
    const TreeNode& nd = dst.tree().node(i);
    const int a = nd.prim.arity();
    const double* u = nullptr;   // unary input
    const double* bb1 = nullptr;  // binary inputs
    const double* bb2 = nullptr;
    if (a == 0) {
      int t1 = 0, t2 = 0;
      leaf_phantom_inputs(ps, w, &t1, &t2);
      tr.t1[static_cast<std::size_t>(i)] = t1;
      tr.t2[static_cast<std::size_t>(i)] = t2;
      u = X.col(static_cast<std::size_t>(ps.at(t1).var));
      bb1 = u;
      bb2 = X.col(static_cast<std::size_t>(ps.at(t2).var));
    } else if (a == 1) {
      int c = nd.child[0];
      const double* rc = tr.node_out(c);
      ops.scale(tr.A[static_cast<std::size_t>(c)], rc, su1, n);
      tr.unary_slot[static_cast<std::size_t>(i)] = 0;
      u = su1;
      bb1 = dst.scale_binary_inputs() ? su1 : rc;
      bb2 = bb1;
    } else {
      int c1 = nd.child[0], c2 = nd.child[1];
      const double* r1 = tr.node_out(c1);
      const double* r2 = tr.node_out(c2);
      double a1 = tr.A[static_cast<std::size_t>(c1)];
      double a2 = tr.A[static_cast<std::size_t>(c2)];
      ops.scale(a1, r1, su1, n);
      ops.scale(a2, r2, su2, n);
      int slot = a1 > a2 ? 0 : a2 > a1 ? 1 : (c1 < c2 ? 0 : 1);
      tr.unary_slot[static_cast<std::size_t>(i)] = slot;
      u = slot == 0 ? su1 : su2;
      bb1 = dst.scale_binary_inputs() ? su1 : r1;
      bb2 = dst.scale_binary_inputs() ? su2 : r2;
    }
    double* out = tr.node_out(i);
    for (int j = 0; j < l; ++j) {
      const Primitive& p = ps.at(j);
      double wj = w[j];
      switch (p.kind) {
        case PrimKind::Var:
          ops.axpy(wj, X.col(static_cast<std::size_t>(p.var)), out, n);
          break;
        case PrimKind::Pass:
          ops.axpy(wj, u, out, n);
          break;
        case PrimKind::Sin:
          for (std::size_t s = 0; s < n; ++s) val[s] = std::sin(u[s]);
          ops.axpy(wj, val, out, n);
          break;
        case PrimKind::Cos:
          for (std::size_t s = 0; s < n; ++s) val[s] = std::cos(u[s]);
          ops.axpy(wj, val, out, n);
          break;
        case PrimKind::Exp:
          for (std::size_t s = 0; s < n; ++s) val[s] = kern::clamped_exp(u[s]);
          ops.axpy(wj, val, out, n);
          break;
        case PrimKind::Log:
          for (std::size_t s = 0; s < n; ++s) val[s] = kern::protected_log(u[s]);
          ops.axpy(wj, val, out, n);
          break;
        case PrimKind::Add:
          ops.add(bb1, bb2, val, n);
          ops.axpy(wj, val, out, n);
          break;
        case PrimKind::Sub:
          ops.sub(bb1, bb2, val, n);
          ops.axpy(wj, val, out, n);
          break;
        case PrimKind::Mul:
          ops.mul(bb1, bb2, val, n);
          ops.axpy(wj, val, out, n);
          break;
        case PrimKind::Div:
          ops.div_p(bb1, bb2, val, n);
          ops.axpy(wj, val, out, n);
          break;
      }
    }
  }
}

std::string dump(const DiffSymbolicTree& dst) {
  std::ostringstream os;
  const PrimitiveSet& ps = dst.prims();
  std::vector<double> w(static_cast<std::size_t>(ps.size()), 0.0);
  os << "DST with " << dst.node_count() << " nodes over L=" << ps.size()
     << " primitives\n";
  for (int i = 0; i < dst.node_count(); ++i) {
    const TreeNode& nd = dst.tree().node(i);
    dst.nodes().softmax_row(i, w);
    os << "  [" << i << "] " << primitive_token(nd.prim);
    if (nd.prim.arity() > 0) {
      os << " children(";
      for (int s = 0; s < nd.prim.arity(); ++s)
        os << (s ? "," : "") << nd.child[static_cast<std::size_t>(s)];
      os << ")";
    }
    if (dst.adjacency().has_edge(i))
      os << " edge=" << dst.adjacency().strength(i);
    // top three weights
    std::vector<int> idx(static_cast<std::size_t>(ps.size()));
    for (int j = 0; j < ps.size(); ++j) idx[static_cast<std::size_t>(j)] = j;
    std::partial_sort(idx.begin(), idx.begin() + std::min<std::size_t>(3, idx.size()),
                      idx.end(), [&](int a, int b) { return w[static_cast<std::size_t>(a)] > w[static_cast<std::size_t>(b)]; });
    os << " top:";
    for (std::size_t q = 0; q < std::min<std::size_t>(3, idx.size()); ++q)
      os << " " << primitive_token(ps.at(idx[q])) << "="
         << w[static_cast<std::size_t>(idx[q])];
    os << "\n";
  }
  return os.str();
}

}  // namespace dgp
