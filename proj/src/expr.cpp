#include "dgp/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "dgp/kernels.hpp"

namespace dgp {

std::string primitive_token(const Primitive& p) {
  switch (p.kind) {
    case PrimKind::Add: return "+";
    case PrimKind::Sub: return "-";
    case PrimKind::Mul: return "*";
    case PrimKind::Div: return "/";
    case PrimKind::Sin: return "sin";
    case PrimKind::Cos: return "cos";
    case PrimKind::Exp: return "exp";
    case PrimKind::Log: return "log";
    case PrimKind::Pass: return "pass";
    case PrimKind::Var: return "x" + std::to_string(p.var);
  }
  return "?";
}

PrimitiveSet::PrimitiveSet(std::vector<Primitive> prims, int dims)
    : prims_(std::move(prims)), dims_(dims) {
  DGP_CHECK(dims_ >= 1, "primitive set: dims must be >= 1");
  DGP_CHECK(!prims_.empty(), "primitive set: empty");
  for (int c = 0; c < size(); ++c) {
    const Primitive& p = prims_[static_cast<std::size_t>(c)];
    for (int o = 0; o < c; ++o)
      DGP_CHECK(!(prims_[static_cast<std::size_t>(o)] == p),
                "primitive set: duplicate primitive");
    if (p.is_terminal()) {
      DGP_CHECK(p.var >= 0 && p.var < dims_,
                "primitive set: variable ordinal out of range");
      terminal_cols_.push_back(c);
    } else {
      function_cols_.push_back(c);
      if (p.kind == PrimKind::Pass) pass_col_ = c;
    }
  }
  DGP_CHECK(!terminal_cols_.empty(), "primitive set: needs at least one terminal");
}

PrimitiveSet PrimitiveSet::canonical(int dims) {
  std::vector<Primitive> p;
  p.reserve(9 + static_cast<std::size_t>(dims));
  for (PrimKind k : {PrimKind::Add, PrimKind::Sub, PrimKind::Mul, PrimKind::Div,
                     PrimKind::Sin, PrimKind::Cos, PrimKind::Exp, PrimKind::Log,
                     PrimKind::Pass})
    p.push_back(prim(k));
  for (int j = 0; j < dims; ++j) p.push_back(var(j));
  return PrimitiveSet(std::move(p), dims);
}

int PrimitiveSet::column_of(const Primitive& p) const {
  for (int c = 0; c < size(); ++c)
    if (prims_[static_cast<std::size_t>(c)] == p) return c;
  return -1;
}

SymbolicTree SymbolicTree::leaf(Primitive terminal) {
  DGP_CHECK(terminal.is_terminal(), "leaf: primitive must be a terminal");
  SymbolicTree t;
  t.nodes_.push_back(TreeNode{terminal, -1, {-1, -1}});
  t.root_ = 0;
  return t;
}

SymbolicTree SymbolicTree::unary(Primitive fn, SymbolicTree child) {
  DGP_CHECK(fn.arity() == 1, "unary: primitive must have arity 1");
  DGP_CHECK(child.root_ >= 0, "unary: child tree is empty");
  SymbolicTree t;
  std::int32_t off = 1;
  t.nodes_.push_back(TreeNode{fn, -1, {child.root_ + off, -1}});
  for (TreeNode n : child.nodes_) {
    n.parent = n.parent < 0 ? 0 : n.parent + off;
    for (auto& c : n.child)
      if (c >= 0) c += off;
    t.nodes_.push_back(n);
  }
  t.root_ = 0;
  return t;
}

SymbolicTree SymbolicTree::binary(Primitive fn, SymbolicTree lhs, SymbolicTree rhs) {
  DGP_CHECK(fn.arity() == 2, "binary: primitive must have arity 2");
  DGP_CHECK(lhs.root_ >= 0 && rhs.root_ >= 0, "binary: child tree is empty");
  SymbolicTree t;
  std::int32_t off1 = 1;
  std::int32_t off2 = 1 + static_cast<std::int32_t>(lhs.nodes_.size());
  t.nodes_.push_back(TreeNode{fn, -1, {lhs.root_ + off1, rhs.root_ + off2}});
  for (TreeNode n : lhs.nodes_) {
    n.parent = n.parent < 0 ? 0 : n.parent + off1;
    for (auto& c : n.child)
      if (c >= 0) c += off1;
    t.nodes_.push_back(n);
  }
  for (TreeNode n : rhs.nodes_) {
    n.parent = n.parent < 0 ? 0 : n.parent + off2;
    for (auto& c : n.child)
      if (c >= 0) c += off2;
    t.nodes_.push_back(n);
  }
  t.root_ = 0;
  return t;
}

SymbolicTree SymbolicTree::from_nodes(std::vector<TreeNode> nodes, int root) {
  SymbolicTree t;
  t.nodes_ = std::move(nodes);
  t.root_ = root;
  std::string why;
  DGP_CHECK(t.structurally_valid(&why), "from_nodes: " + why);
  return t;
}

bool SymbolicTree::structurally_valid(std::string* why) const {
  auto fail = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  int k = size();
  if (k == 0 || root_ < 0 || root_ >= k) return fail("root out of range");
  if (nodes_[static_cast<std::size_t>(root_)].parent != -1)
    return fail("root has a parent");
  std::vector<int> child_refs(static_cast<std::size_t>(k), 0);
  for (int i = 0; i < k; ++i) {
    const TreeNode& n = nodes_[static_cast<std::size_t>(i)];
    int a = n.prim.arity();
    for (int s = 0; s < 2; ++s) {
      std::int32_t c = n.child[static_cast<std::size_t>(s)];
      if (s < a) {
        if (c < 0 || c >= k) return fail("missing or out-of-range child");
        if (nodes_[static_cast<std::size_t>(c)].parent != i)
          return fail("child parent link mismatch");
        ++child_refs[static_cast<std::size_t>(c)];
      } else if (c != -1) {
        return fail("extra child beyond arity");
      }
    }
  }
  for (int i = 0; i < k; ++i) {
    int refs = child_refs[static_cast<std::size_t>(i)];
    if (i == root_ ? refs != 0 : refs != 1)
      return fail("node referenced wrong number of times");
  }
  // reachability (also rules out cycles, given the reference counts)
  std::vector<char> seen(static_cast<std::size_t>(k), 0);
  std::vector<int> stack{root_};
  int visited = 0;
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    if (seen[static_cast<std::size_t>(i)]) return fail("cycle");
    seen[static_cast<std::size_t>(i)] = 1;
    ++visited;
    const TreeNode& n = nodes_[static_cast<std::size_t>(i)];
    for (int s = 0; s < n.prim.arity(); ++s)
      stack.push_back(n.child[static_cast<std::size_t>(s)]);
  }
  if (visited != k) return fail("unreachable nodes");
  return true;
}

int SymbolicTree::depth_of(int i) const {
  int d = 0;
  for (std::int32_t p = nodes_[static_cast<std::size_t>(i)].parent; p >= 0;
       p = nodes_[static_cast<std::size_t>(p)].parent)
    ++d;
  return d;
}

int SymbolicTree::depth() const {
  std::vector<std::pair<int, int>> stack{{root_, 0}};
  int best = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    const TreeNode& n = nodes_[static_cast<std::size_t>(i)];
    for (int s = 0; s < n.prim.arity(); ++s)
      stack.emplace_back(n.child[static_cast<std::size_t>(s)], d + 1);
  }
  return best;
}

int SymbolicTree::subtree_size(int i) const {
  std::vector<int> stack{i};
  int count = 0;
  while (!stack.empty()) {
    int j = stack.back();
    stack.pop_back();
    ++count;
    const TreeNode& n = nodes_[static_cast<std::size_t>(j)];
    for (int s = 0; s < n.prim.arity(); ++s)
      stack.push_back(n.child[static_cast<std::size_t>(s)]);
  }
  return count;
}

std::vector<int> SymbolicTree::postorder() const {
  std::vector<int> order;
  order.reserve(nodes_.size());
  // two-stack postorder
  std::vector<int> s1{root_}, s2;
  while (!s1.empty()) {
    int i = s1.back();
    s1.pop_back();
    s2.push_back(i);
    const TreeNode& n = nodes_[static_cast<std::size_t>(i)];
    for (int s = 0; s < n.prim.arity(); ++s)
      s1.push_back(n.child[static_cast<std::size_t>(s)]);
  }
  order.assign(s2.rbegin(), s2.rend());
  return order;
}

int SymbolicTree::max_var() const {
  int m = -1;
  for (const TreeNode& n : nodes_)
    if (n.prim.is_terminal()) m = std::max(m, static_cast<int>(n.prim.var));
  return m;
}

namespace {

// Preorder copy of src's subtree at src_i into out, returns new index.
std::int32_t copy_preorder(const SymbolicTree& src, int src_i,
                           std::vector<TreeNode>& out, std::int32_t parent) {
  const TreeNode& n = src.node(src_i);
  std::int32_t idx = static_cast<std::int32_t>(out.size());
  out.push_back(TreeNode{n.prim, parent, {-1, -1}});
  for (int s = 0; s < n.prim.arity(); ++s) {
    std::int32_t c = copy_preorder(src, n.child[static_cast<std::size_t>(s)], out, idx);
    out[static_cast<std::size_t>(idx)].child[static_cast<std::size_t>(s)] = c;
  }
  return idx;
}

}  // namespace

SymbolicTree SymbolicTree::subtree(int i) const {
  std::vector<TreeNode> out;
  out.reserve(static_cast<std::size_t>(subtree_size(i)));
  copy_preorder(*this, i, out, -1);
  return from_nodes(std::move(out), 0);
}

SymbolicTree SymbolicTree::normalized() const { return subtree(root_); }

namespace {

std::int32_t copy_with_replacement(const SymbolicTree& src, int src_i, int target,
                                   const SymbolicTree& repl,
                                   std::vector<TreeNode>& out, std::int32_t parent) {
  if (src_i == target) {
    std::int32_t idx = copy_preorder(repl, repl.root(), out, parent);
    return idx;
  }
  const TreeNode& n = src.node(src_i);
  std::int32_t idx = static_cast<std::int32_t>(out.size());
  out.push_back(TreeNode{n.prim, parent, {-1, -1}});
  for (int s = 0; s < n.prim.arity(); ++s) {
    std::int32_t c = copy_with_replacement(
        src, n.child[static_cast<std::size_t>(s)], target, repl, out, idx);
    out[static_cast<std::size_t>(idx)].child[static_cast<std::size_t>(s)] = c;
  }
  return idx;
}

}  // namespace

SymbolicTree SymbolicTree::with_subtree(int i, const SymbolicTree& replacement) const {
  DGP_CHECK(i >= 0 && i < size(), "with_subtree: index out of range");
  if (i == root_) return replacement.normalized();
  std::vector<TreeNode> out;
  copy_with_replacement(*this, root_, i, replacement, out, -1);
  return from_nodes(std::move(out), 0);
}

double apply_primitive(const Primitive& p, std::span<const double> inputs,
                       std::span<const double> x) {
  switch (p.kind) {
    case PrimKind::Add: return inputs[0] + inputs[1];
    case PrimKind::Sub: return inputs[0] - inputs[1];
    case PrimKind::Mul: return inputs[0] * inputs[1];
    case PrimKind::Div: return kern::protected_div(inputs[0], inputs[1]);
    case PrimKind::Sin: return std::sin(inputs[0]);
    case PrimKind::Cos: return std::cos(inputs[0]);
    case PrimKind::Exp: return kern::clamped_exp(inputs[0]);
    case PrimKind::Log: return kern::protected_log(inputs[0]);
    case PrimKind::Pass: return inputs[0];
    case PrimKind::Var: return x[static_cast<std::size_t>(p.var)];
  }
  return 0.0;
}

double evaluate_tree(const SymbolicTree& t, std::span<const double> x,
                     bool* protection_fired) {
  DGP_CHECK(t.max_var() < static_cast<int>(x.size()),
            "evaluate_tree: input vector too short for tree variables");
  if (protection_fired) *protection_fired = false;
  std::vector<double> val(static_cast<std::size_t>(t.size()), 0.0);
  for (int i : t.postorder()) {
    const TreeNode& n = t.node(i);
    double in[2] = {0.0, 0.0};
    for (int s = 0; s < n.prim.arity(); ++s)
      in[s] = val[static_cast<std::size_t>(n.child[static_cast<std::size_t>(s)])];
    if (protection_fired) {
      switch (n.prim.kind) {
        case PrimKind::Div:
          if (std::fabs(in[1]) < kern::kDivEps) *protection_fired = true;
          break;
        case PrimKind::Log:
          if (in[0] < kern::kLogEps) *protection_fired = true;
          break;
        case PrimKind::Exp:
          if (in[0] >= kern::kExpClamp) *protection_fired = true;
          break;
        default:
          break;
      }
    }
    val[static_cast<std::size_t>(i)] =
        apply_primitive(n.prim, {in, 2}, x);
  }
  return val[static_cast<std::size_t>(t.root())];
}

void evaluate_tree_batch(const SymbolicTree& t, const ColMatrix& X,
                         std::span<double> out) {
  DGP_CHECK(t.max_var() < static_cast<int>(X.cols),
            "evaluate_tree_batch: matrix has too few columns");
  DGP_CHECK(out.size() == X.rows, "evaluate_tree_batch: output size mismatch");
  const std::size_t n = X.rows;
  const auto& k = kern::ops();
  std::vector<double> arena(static_cast<std::size_t>(t.size()) * n);
  auto buf = [&](int i) { return arena.data() + static_cast<std::size_t>(i) * n; };
  for (int i : t.postorder()) {
    const TreeNode& nd = t.node(i);
    double* dst = buf(i);
    const double* a = nd.prim.arity() >= 1 ? buf(nd.child[0]) : nullptr;
    const double* b = nd.prim.arity() >= 2 ? buf(nd.child[1]) : nullptr;
    switch (nd.prim.kind) {
      case PrimKind::Add: k.add(a, b, dst, n); break;
      case PrimKind::Sub: k.sub(a, b, dst, n); break;
      case PrimKind::Mul: k.mul(a, b, dst, n); break;
      case PrimKind::Div: k.div_p(a, b, dst, n); break;
      case PrimKind::Sin:
        for (std::size_t s = 0; s < n; ++s) dst[s] = std::sin(a[s]);
        break;
      case PrimKind::Cos:
        for (std::size_t s = 0; s < n; ++s) dst[s] = std::cos(a[s]);
        break;
      case PrimKind::Exp:
        for (std::size_t s = 0; s < n; ++s) dst[s] = kern::clamped_exp(a[s]);
        break;
      case PrimKind::Log:
        for (std::size_t s = 0; s < n; ++s) dst[s] = kern::protected_log(a[s]);
        break;
      case PrimKind::Pass:
        std::copy(a, a + n, dst);
        break;
      case PrimKind::Var:
        std::copy(X.col(static_cast<std::size_t>(nd.prim.var)),
                  X.col(static_cast<std::size_t>(nd.prim.var)) + n, dst);
        break;
    }
  }
  const double* r = buf(t.root());
  std::copy(r, r + n, out.begin());
}

namespace {

SymbolicTree grow_rec(Rng& rng, int cur, int height, int min_depth, bool full,
                      const PrimitiveSet& ps, double term_prob) {
  std::span<const int> terms = ps.terminal_columns();
  // functions eligible for generation: everything except Pass
  auto draw_function = [&]() -> Primitive {
    std::span<const int> fns = ps.function_columns();
    int pass = ps.pass_column();
    std::size_t count = fns.size() - (pass >= 0 ? 1u : 0u);
    std::size_t pick = rng.index(count);
    for (int c : fns) {
      if (c == pass) continue;
      if (pick == 0) return ps.at(c);
      --pick;
    }
    return ps.at(fns[0]);  // unreachable
  };
  bool pick_terminal =
      cur == height ||
      (!full && cur >= min_depth && rng.uniform() < term_prob);
  if (pick_terminal)
    return SymbolicTree::leaf(ps.at(terms[rng.index(terms.size())]));
  Primitive fn = draw_function();
  if (fn.arity() == 1)
    return SymbolicTree::unary(
        fn, grow_rec(rng, cur + 1, height, min_depth, full, ps, term_prob));
  SymbolicTree lhs = grow_rec(rng, cur + 1, height, min_depth, full, ps, term_prob);
  SymbolicTree rhs = grow_rec(rng, cur + 1, height, min_depth, full, ps, term_prob);
  return SymbolicTree::binary(fn, std::move(lhs), std::move(rhs));
}

}  // namespace

SymbolicTree random_tree(Rng& rng, const DepthRange& depth, GrowMethod method,
                         const PrimitiveSet& ps) {
  DGP_CHECK(depth.min >= 0 && depth.max >= depth.min, "random_tree: bad depth range");
  int h = rng.range(depth.min, depth.max);
  std::size_t nfun = ps.function_columns().size() - (ps.pass_column() >= 0 ? 1u : 0u);
  std::size_t nterm = ps.terminal_columns().size();
  double term_prob =
      static_cast<double>(nterm) / static_cast<double>(nterm + nfun);
  if (h == 0 || nfun == 0) {
    std::span<const int> terms = ps.terminal_columns();
    return SymbolicTree::leaf(ps.at(terms[rng.index(terms.size())]));
  }
  return grow_rec(rng, 0, h, depth.min, method == GrowMethod::Full, ps, term_prob);
}

namespace {

std::int32_t copy_skipping_pass(const SymbolicTree& src, int src_i,
                                std::vector<TreeNode>& out, std::int32_t parent) {
  int i = src_i;
  while (src.node(i).prim.kind == PrimKind::Pass) i = src.node(i).child[0];
  const TreeNode& n = src.node(i);
  std::int32_t idx = static_cast<std::int32_t>(out.size());
  out.push_back(TreeNode{n.prim, parent, {-1, -1}});
  for (int s = 0; s < n.prim.arity(); ++s) {
    std::int32_t c = copy_skipping_pass(
        src, n.child[static_cast<std::size_t>(s)], out, idx);
    out[static_cast<std::size_t>(idx)].child[static_cast<std::size_t>(s)] = c;
  }
  return idx;
}

}  // namespace

SymbolicTree simplify(const SymbolicTree& t) {
  std::vector<TreeNode> out;
  out.reserve(static_cast<std::size_t>(t.size()));
  copy_skipping_pass(t, t.root(), out, -1);
  return SymbolicTree::from_nodes(std::move(out), 0);
}

namespace {

double radical_inverse(std::uint64_t k, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base);
  double f = inv, r = 0.0;
  while (k > 0) {
    r += f * static_cast<double>(k % base);
    k /= base;
    f *= inv;
  }
  return r;
}

constexpr std::uint64_t kHaltonBases[] = {2,  3,  5,  7,  11, 13, 17, 19,
                                          23, 29, 31, 37, 41, 43, 47, 53};

}  // namespace

bool numeric_equiv(const SymbolicTree& a, const SymbolicTree& b,
                   const Domain& dom, Rng& rng) {
  const int d = static_cast<int>(dom.ranges.size());
  DGP_CHECK(d >= 1, "numeric_equiv: empty domain");
  DGP_CHECK(a.max_var() < d && b.max_var() < d,
            "numeric_equiv: domain does not cover tree variables");
  constexpr int kPoints = 256;
  std::vector<std::array<double, 2>> lims(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    auto [lo, hi] = dom.ranges[static_cast<std::size_t>(j)];
    DGP_CHECK(lo < hi, "numeric_equiv: empty range");
    lims[static_cast<std::size_t>(j)] = {lo, hi};
  }
  std::vector<double> shifts;
  if (d > 2) {
    DGP_CHECK(d <= 16, "numeric_equiv: too many dimensions");
    for (int j = 0; j < d; ++j) shifts.push_back(rng.uniform());
  }
  std::vector<double> x(static_cast<std::size_t>(d), 0.0);
  int used = 0, skipped = 0;
  for (int k = 0; k < kPoints; ++k) {
    if (d == 1) {
      auto [lo, hi] = lims[0];
      x[0] = lo + (static_cast<double>(k) + 0.5) / kPoints * (hi - lo);
    } else if (d == 2) {
      int u = k % 16, v = k / 16;
      x[0] = lims[0][0] + (u + 0.5) / 16.0 * (lims[0][1] - lims[0][0]);
      x[1] = lims[1][0] + (v + 0.5) / 16.0 * (lims[1][1] - lims[1][0]);
    } else {
      for (int j = 0; j < d; ++j) {
        double u = radical_inverse(static_cast<std::uint64_t>(k) + 1,
                                   kHaltonBases[static_cast<std::size_t>(j)]) +
                   shifts[static_cast<std::size_t>(j)];
        u -= std::floor(u);
        x[static_cast<std::size_t>(j)] =
            lims[static_cast<std::size_t>(j)][0] +
            u * (lims[static_cast<std::size_t>(j)][1] -
                 lims[static_cast<std::size_t>(j)][0]);
      }
    }
    bool fa = false, fb = false;
    double va = evaluate_tree(a, x, &fa);
    double vb = evaluate_tree(b, x, &fb);
    if (fa || fb) {
      ++skipped;
      continue;
    }
    ++used;
    if (va == vb) continue;
    if (!(std::fabs(va - vb) <= 1e-10 * (1.0 + std::fabs(vb)))) return false;
  }
  // mostly-protected comparisons are indeterminate
  return skipped <= kPoints / 2 && used > 0;
}

namespace {

void print_prefix(const SymbolicTree& t, int i, std::string& out) {
  const TreeNode& n = t.node(i);
  if (n.prim.arity() == 0) {
    out += primitive_token(n.prim);
    return;
  }
  out += '(';
  out += primitive_token(n.prim);
  for (int s = 0; s < n.prim.arity(); ++s) {
    out += ' ';
    print_prefix(t, n.child[static_cast<std::size_t>(s)], out);
  }
  out += ')';
}

struct Lexer {
  std::string_view text;
  std::size_t pos = 0;

  std::optional<std::string_view> next() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
      ++pos;
    if (pos >= text.size()) return std::nullopt;
    char c = text[pos];
    if (c == '(' || c == ')') {
      ++pos;
      return text.substr(pos - 1, 1);
    }
    std::size_t start = pos;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) &&
           text[pos] != '(' && text[pos] != ')')
      ++pos;
    return text.substr(start, pos - start);
  }
};

std::optional<Primitive> token_primitive(std::string_view tok) {
  if (tok == "+") return prim(PrimKind::Add);
  if (tok == "-") return prim(PrimKind::Sub);
  if (tok == "*") return prim(PrimKind::Mul);
  if (tok == "/") return prim(PrimKind::Div);
  if (tok == "sin") return prim(PrimKind::Sin);
  if (tok == "cos") return prim(PrimKind::Cos);
  if (tok == "exp") return prim(PrimKind::Exp);
  if (tok == "log") return prim(PrimKind::Log);
  if (tok == "pass") return prim(PrimKind::Pass);
  if (tok.size() >= 2 && tok[0] == 'x') {
    std::int32_t v = 0;
    for (std::size_t i = 1; i < tok.size(); ++i) {
      if (tok[i] < '0' || tok[i] > '9') return std::nullopt;
      v = v * 10 + (tok[i] - '0');
      if (v > 1000000) return std::nullopt;
    }
    return var(v);
  }
  return std::nullopt;
}

SymbolicTree parse_expr(Lexer& lx) {
  auto tok = lx.next();
  DGP_CHECK(tok.has_value(), "parse: unexpected end of input");
  if (*tok == "(") {
    auto head = lx.next();
    DGP_CHECK(head.has_value() && *head != "(" && *head != ")",
              "parse: expected operator after '('");
    auto p = token_primitive(*head);
    DGP_CHECK(p.has_value(), "parse: unknown token '" + std::string(*head) + "'");
    DGP_CHECK(p->arity() > 0, "parse: terminal cannot head a list");
    SymbolicTree result;
    if (p->arity() == 1) {
      SymbolicTree c = parse_expr(lx);
      result = SymbolicTree::unary(*p, std::move(c));
    } else {
      SymbolicTree l = parse_expr(lx);
      SymbolicTree r = parse_expr(lx);
      result = SymbolicTree::binary(*p, std::move(l), std::move(r));
    }
    auto close = lx.next();
    DGP_CHECK(close.has_value() && *close == ")", "parse: expected ')'");
    return result;
  }
  DGP_CHECK(*tok != ")", "parse: unexpected ')'");
  auto p = token_primitive(*tok);
  DGP_CHECK(p.has_value(), "parse: unknown token '" + std::string(*tok) + "'");
  DGP_CHECK(p->is_terminal(), "parse: operator '" + std::string(*tok) +
                                  "' needs parenthesized arguments");
  return SymbolicTree::leaf(*p);
}

}  // namespace

std::string to_prefix(const SymbolicTree& t) {
  std::string out;
  print_prefix(t, t.root(), out);
  return out;
}

SymbolicTree parse_prefix(std::string_view text) {
  Lexer lx{text};
  SymbolicTree t = parse_expr(lx);
  auto extra = lx.next();
  DGP_CHECK(!extra.has_value(), "parse: trailing tokens");
  return t;
}

}  // namespace dgp
