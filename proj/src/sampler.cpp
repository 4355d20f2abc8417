#include "dgp/sampler.hpp"

#include <algorithm>
#include <cmath>

namespace dgp {

namespace {

// Softmax draw over logits/temperature restricted to columns for which
// admit(col) holds. Stabilized by max subtraction.
int draw_column(std::span<const double> logits, double temperature, Rng& rng,
                const std::function<bool(int)>& admit) {
  const int l = static_cast<int>(logits.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < l; ++j)
    if (admit(j)) mx = std::max(mx, logits[static_cast<std::size_t>(j)] / temperature);
  double total = 0.0;
  for (int j = 0; j < l; ++j)
    if (admit(j))
      total += std::exp(logits[static_cast<std::size_t>(j)] / temperature - mx);
  double u = rng.uniform() * total;
  double cum = 0.0;
  int last = -1;
  for (int j = 0; j < l; ++j) {
    if (!admit(j)) continue;
    last = j;
    cum += std::exp(logits[static_cast<std::size_t>(j)] / temperature - mx);
    if (u < cum) return j;
  }
  return last;  // numerical leftovers land on the final admissible column
}

int draw_terminal(std::span<const double> logits, double temperature, Rng& rng,
                  const PrimitiveSet& ps) {
  return draw_column(logits, temperature, rng,
                     [&](int col) { return ps.at(col).kind == PrimKind::Var; });
}

// Mutable tree with stable node ids: edits mark nodes dead instead of
// renumbering, so one pass of bottom-up sampling can address every original
// node even as the structure changes around it.
struct Work {
  std::vector<TreeNode> nodes;
  std::vector<char> alive;
  std::vector<double> strength;  // parent-edge strength, slot-inherited
  std::int32_t root = -1;
  int alive_count = 0;

  static Work from(const SymbolicTree& t, std::span<const double> strengths) {
    Work w;
    w.nodes.assign(t.nodes().begin(), t.nodes().end());
    w.alive.assign(w.nodes.size(), 1);
    w.strength.assign(w.nodes.size(), 0.0);
    if (!strengths.empty())
      for (std::size_t i = 0; i < w.nodes.size() && i < strengths.size(); ++i)
        w.strength[i] = strengths[i];
    w.root = t.root();
    w.alive_count = t.size();
    return w;
  }

  int depth_of(int i) const {
    int d = 0;
    for (std::int32_t p = nodes[static_cast<std::size_t>(i)].parent; p >= 0;
         p = nodes[static_cast<std::size_t>(p)].parent)
      ++d;
    return d;
  }

  void kill_subtree(int i) {
    std::vector<int> stack{i};
    while (!stack.empty()) {
      int j = stack.back();
      stack.pop_back();
      alive[static_cast<std::size_t>(j)] = 0;
      --alive_count;
      const TreeNode& n = nodes[static_cast<std::size_t>(j)];
      for (int s = 0; s < n.prim.arity(); ++s)
        stack.push_back(n.child[static_cast<std::size_t>(s)]);
    }
  }

  // Replace the whole subtree at i by a terminal leaf (arity-down onto a
  // drawn terminal). The node keeps its id and its slot's edge strength.
  void to_leaf(int i, Primitive term) {
    TreeNode& n = nodes[static_cast<std::size_t>(i)];
    for (int s = 0; s < n.prim.arity(); ++s)
      kill_subtree(n.child[static_cast<std::size_t>(s)]);
    n.prim = term;
    n.child = {-1, -1};
  }

  // Delete function node i; the surviving child (stronger edge for binary
  // nodes, ties to the lower index) is hoisted into i's place and inherits
  // i's slot strength.
  void shrink_at(int i) {
    TreeNode& n = nodes[static_cast<std::size_t>(i)];
    const int a = n.prim.arity();
    int keep;
    if (a == 1) {
      keep = n.child[0];
    } else {
      int c1 = n.child[0], c2 = n.child[1];
      double s1 = strength[static_cast<std::size_t>(c1)];
      double s2 = strength[static_cast<std::size_t>(c2)];
      keep = s1 > s2 ? c1 : s2 > s1 ? c2 : std::min(c1, c2);
      kill_subtree(keep == c1 ? c2 : c1);
    }
    std::int32_t p = n.parent;
    nodes[static_cast<std::size_t>(keep)].parent = p;
    strength[static_cast<std::size_t>(keep)] = strength[static_cast<std::size_t>(i)];
    if (p < 0) {
      root = keep;
    } else {
      TreeNode& pn = nodes[static_cast<std::size_t>(p)];
      for (int s = 0; s < pn.prim.arity(); ++s)
        if (pn.child[static_cast<std::size_t>(s)] == i)
          pn.child[static_cast<std::size_t>(s)] = keep;
    }
    alive[static_cast<std::size_t>(i)] = 0;
    --alive_count;
  }

  // Raise node i's arity to p's; existing children stay as first operands,
  // new random terminal leaves fill the remaining slots. When the caller has
  // trained logits for the node, terminals are drawn from them (softmax over
  // the terminal columns at the caller's temperature); otherwise uniformly.
  void expand_at(int i, Primitive p, Rng& rng, const PrimitiveSet& ps,
                 std::span<const double> term_logits = {},
                 double temperature = 1.0) {
    TreeNode& n = nodes[static_cast<std::size_t>(i)];
    const int a_old = n.prim.arity();
    const int a_new = p.arity();
    std::span<const int> terms = ps.terminal_columns();
    for (int s = a_old; s < a_new; ++s) {
      Primitive leaf = term_logits.empty()
                           ? ps.at(terms[rng.index(terms.size())])
                           : ps.at(draw_terminal(term_logits, temperature, rng, ps));
      std::int32_t idx = static_cast<std::int32_t>(nodes.size());
      nodes.push_back(TreeNode{leaf, i, {-1, -1}});
      alive.push_back(1);
      // never consulted: hoisting only ever compares siblings that predate
      // their parent's processing
      strength.push_back(0.5);
      ++alive_count;
      nodes[static_cast<std::size_t>(i)].child[static_cast<std::size_t>(s)] = idx;
    }
    nodes[static_cast<std::size_t>(i)].prim = p;
  }

  SymbolicTree compact() const {
    std::vector<TreeNode> out;
    out.reserve(static_cast<std::size_t>(alive_count));
    // preorder copy
    struct Frame { int src; std::int32_t parent; int slot; };
    std::vector<Frame> stack{{root, -1, 0}};
    std::vector<TreeNode> result;
    result.reserve(static_cast<std::size_t>(alive_count));
    // recursive lambda via explicit stack, preserving slot order
    std::function<std::int32_t(int, std::int32_t)> copy =
        [&](int src, std::int32_t parent) -> std::int32_t {
      const TreeNode& n = nodes[static_cast<std::size_t>(src)];
      std::int32_t idx = static_cast<std::int32_t>(result.size());
      result.push_back(TreeNode{n.prim, parent, {-1, -1}});
      for (int s = 0; s < n.prim.arity(); ++s) {
        std::int32_t c = copy(n.child[static_cast<std::size_t>(s)], idx);
        result[static_cast<std::size_t>(idx)].child[static_cast<std::size_t>(s)] = c;
      }
      return idx;
    };
    copy(root, -1);
    return SymbolicTree::from_nodes(std::move(result), 0);
  }
};

}  // namespace

SymbolicTree sample_tree(const DiffSymbolicTree& dst, Rng& rng,
                         const SampleConfig& cfg) {
  DGP_CHECK(cfg.temperature > 0.0, "sample_tree: temperature must be > 0");
  const PrimitiveSet& ps = dst.prims();
  const SymbolicTree& t = dst.tree();

  std::vector<double> strengths(static_cast<std::size_t>(t.size()), 0.0);
  for (int c = 0; c < t.size(); ++c)
    if (dst.adjacency().has_edge(c))
      strengths[static_cast<std::size_t>(c)] = dst.adjacency().strength(c);
  Work w = Work::from(t, strengths);

  auto any = [](int) { return true; };
  for (int i : dst.eval_order()) {
    if (!w.alive[static_cast<std::size_t>(i)]) continue;
    std::span<const double> logits = dst.nodes().row(i);
    int j = draw_column(logits, cfg.temperature, rng, any);
    Primitive p = ps.at(j);
    const int a_old = w.nodes[static_cast<std::size_t>(i)].prim.arity();
    int a_new = p.arity();

    if (a_new > a_old) {
      const int extra = a_new - a_old;
      const bool fits = w.alive_count + extra <= cfg.max_nodes &&
                        w.depth_of(i) + 1 <= cfg.max_depth;
      if (!fits) {
        j = draw_column(logits, cfg.temperature, rng,
                        [&](int col) { return ps.at(col).arity() <= a_old; });
        p = ps.at(j);
        a_new = p.arity();
      }
    }

    if (a_new > a_old) {
      w.expand_at(i, p, rng, ps, logits, cfg.temperature);
    } else if (p.kind == PrimKind::Pass && a_old >= 1) {
      w.shrink_at(i);
    } else if (a_new == a_old) {
      w.nodes[static_cast<std::size_t>(i)].prim = p;
    } else if (a_new == 0) {
      w.to_leaf(i, p);
    } else {
      w.shrink_at(i);  // unary drawn at a binary node
    }
  }
  return w.compact();
}

SymbolicTree shrink(const SymbolicTree& t, int i,
                    std::span<const double> strengths) {
  DGP_CHECK(i >= 0 && i < t.size(), "shrink: index out of range");
  const int a = t.node(i).prim.arity();
  DGP_CHECK(a >= 1, "shrink: cannot shrink a terminal");
  DGP_CHECK(a == 1 || strengths.size() == static_cast<std::size_t>(t.size()),
            "shrink: binary shrink needs one strength per node");
  Work w = Work::from(t, strengths);
  w.shrink_at(i);
  return w.compact();
}

SymbolicTree replace(const SymbolicTree& t, int i, Primitive p) {
  DGP_CHECK(i >= 0 && i < t.size(), "replace: index out of range");
  DGP_CHECK(p.arity() == t.node(i).prim.arity(), "replace: arity must match");
  Work w = Work::from(t, {});
  w.nodes[static_cast<std::size_t>(i)].prim = p;
  return w.compact();
}

std::optional<SymbolicTree> expand(const SymbolicTree& t, int i, Primitive p,
                                   Rng& rng, const PrimitiveSet& ps,
                                   int max_nodes, int max_depth) {
  DGP_CHECK(i >= 0 && i < t.size(), "expand: index out of range");
  const int a_old = t.node(i).prim.arity();
  DGP_CHECK(p.arity() > a_old, "expand: new primitive must raise the arity");
  const int extra = p.arity() - a_old;
  if (t.size() + extra > max_nodes || t.depth_of(i) + 1 > max_depth)
    return std::nullopt;
  Work w = Work::from(t, {});
  w.expand_at(i, p, rng, ps);
  return w.compact();
}

namespace {

bool within_caps(const SymbolicTree& t, int max_nodes, int max_depth) {
  return t.size() <= max_nodes && t.depth() <= max_depth;
}

}  // namespace

std::pair<SymbolicTree, SymbolicTree> crossover_one_point(
    const SymbolicTree& a, const SymbolicTree& b, Rng& rng,
    const GeneticConfig& gc) {
  int ia = static_cast<int>(rng.index(static_cast<std::size_t>(a.size())));
  int ib = static_cast<int>(rng.index(static_cast<std::size_t>(b.size())));
  SymbolicTree oa = a.with_subtree(ia, b.subtree(ib));
  SymbolicTree ob = b.with_subtree(ib, a.subtree(ia));
  if (!within_caps(oa, gc.max_nodes, gc.max_depth)) oa = a.normalized();
  if (!within_caps(ob, gc.max_nodes, gc.max_depth)) ob = b.normalized();
  return {std::move(oa), std::move(ob)};
}

SymbolicTree mutate_uniform(const SymbolicTree& t, Rng& rng,
                            const GeneticConfig& gc, const PrimitiveSet& ps) {
  int i = static_cast<int>(rng.index(static_cast<std::size_t>(t.size())));
  SymbolicTree repl = random_tree(rng, gc.mutate_depth, GrowMethod::Grow, ps);
  SymbolicTree out = t.with_subtree(i, repl);
  if (!within_caps(out, gc.max_nodes, gc.max_depth)) return t.normalized();
  return out;
}

std::vector<Individual> diversify(std::vector<Individual> pool,
                                  const GeneticConfig& gc,
                                  const PrimitiveSet& ps,
                                  const BatchEvaluator& evaluate, Rng& rng,
                                  std::optional<double> stop_below) {
  DGP_CHECK(!pool.empty(), "diversify: empty pool");
  DGP_CHECK(gc.tournament_size >= 1, "diversify: tournament size must be >= 1");
  const std::size_t p = pool.size();

  auto best_index = [&](const std::vector<Individual>& v) {
    std::size_t b = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
      if (v[i].fitness < v[b].fitness) b = i;
    return b;
  };

  for (int gen = 0; gen < gc.generations_per_iteration; ++gen) {
    if (stop_below && pool[best_index(pool)].fitness < *stop_below) break;

    Individual elite = pool[best_index(pool)];

    // tournament selection of p-1 parents (with replacement)
    std::vector<std::size_t> parents(p - 1);
    for (std::size_t k = 0; k < parents.size(); ++k) {
      std::size_t winner = rng.index(p);
      for (int d = 1; d < gc.tournament_size; ++d) {
        std::size_t cand = rng.index(p);
        if (pool[cand].fitness < pool[winner].fitness) winner = cand;
      }
      parents[k] = winner;
    }

    std::vector<Individual> off;
    off.reserve(p);
    std::vector<char> modified(parents.size(), 0);
    for (std::size_t k = 0; k < parents.size(); ++k) off.push_back(pool[parents[k]]);

    for (std::size_t k = 0; k + 1 < off.size(); k += 2) {
      if (!rng.bernoulli(gc.crossover_rate)) continue;
      auto [oa, ob] = crossover_one_point(off[k].tree, off[k + 1].tree, rng, gc);
      // a cap revert hands back the parent tree: that offspring is unchanged
      bool same_a = to_prefix(oa) == to_prefix(off[k].tree);
      bool same_b = to_prefix(ob) == to_prefix(off[k + 1].tree);
      off[k].tree = std::move(oa);
      off[k + 1].tree = std::move(ob);
      if (!same_a) modified[k] = 1;
      if (!same_b) modified[k + 1] = 1;
    }
    for (std::size_t k = 0; k < off.size(); ++k) {
      if (!rng.bernoulli(gc.mutation_rate)) continue;
      SymbolicTree m = mutate_uniform(off[k].tree, rng, gc, ps);
      if (to_prefix(m) != to_prefix(off[k].tree)) {
        off[k].tree = std::move(m);
        modified[k] = 1;
      }
    }

    // evaluate the modified offspring; a short count means the budget is gone
    std::vector<const SymbolicTree*> need;
    std::vector<std::size_t> need_idx;
    for (std::size_t k = 0; k < off.size(); ++k)
      if (modified[k]) {
        need.push_back(&off[k].tree);
        need_idx.push_back(k);
      }
    std::vector<double> fits(need.size(), 0.0);
    std::size_t evaluated = need.empty() ? 0 : evaluate(need, fits);
    for (std::size_t q = 0; q < need.size(); ++q) {
      std::size_t k = need_idx[q];
      if (q < evaluated) {
        off[k].fitness = fits[q];
      } else {
        off[k] = pool[parents[k]];  // budget ran out: keep the parent
      }
    }

    off.push_back(std::move(elite));
    pool = std::move(off);

    if (evaluated < need.size()) break;  // budget exhausted
  }
  return pool;
}

}  // namespace dgp
