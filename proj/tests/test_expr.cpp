#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "dgp/expr.hpp"
#include "dgp/kernels.hpp"

using namespace dgp;

namespace {

SymbolicTree t_add_x0_x1() {
  return SymbolicTree::binary(prim(PrimKind::Add), SymbolicTree::leaf(var(0)),
                              SymbolicTree::leaf(var(1)));
}

}  // namespace

TEST_CASE("primitive set layout") {
  PrimitiveSet ps = PrimitiveSet::canonical(2);
  CHECK(ps.size() == 11);  // 9 functions + 2 terminals
  CHECK(ps.dims() == 2);
  CHECK(ps.function_columns().size() == 9);
  CHECK(ps.terminal_columns().size() == 2);
  CHECK(ps.pass_column() >= 0);
  CHECK(ps.at(ps.pass_column()).kind == PrimKind::Pass);
  CHECK(ps.column_of(var(1)) == ps.terminal_columns()[1]);
  CHECK(ps.column_of(var(5)) == -1);

  PrimitiveSet one = PrimitiveSet::canonical(1);
  CHECK(one.size() == 10);
}

TEST_CASE("builders keep structure valid") {
  SymbolicTree t = t_add_x0_x1();
  CHECK(t.size() == 3);
  CHECK(t.structurally_valid());
  CHECK(t.depth() == 1);
  CHECK(t.max_var() == 1);

  SymbolicTree u = SymbolicTree::unary(prim(PrimKind::Sin), t_add_x0_x1());
  CHECK(u.size() == 4);
  CHECK(u.depth() == 2);
  CHECK(u.node(u.root()).prim.kind == PrimKind::Sin);

  // from_nodes rejects arity-inconsistent input
  std::vector<TreeNode> bad(1);
  bad[0].prim = prim(PrimKind::Add);  // binary with no children
  CHECK_THROWS_AS((void)SymbolicTree::from_nodes(bad, 0), ContractViolation);
}

TEST_CASE("evaluation uses protected operators") {
  std::vector<double> x = {1.0, 0.0};

  SymbolicTree div = SymbolicTree::binary(
      prim(PrimKind::Div), SymbolicTree::leaf(var(0)), SymbolicTree::leaf(var(1)));
  bool fired = false;
  CHECK(evaluate_tree(div, x, &fired) == doctest::Approx(1e6).epsilon(1e-15));
  CHECK(fired);

  fired = false;
  std::vector<double> ok = {1.0, 4.0};
  CHECK(evaluate_tree(div, ok, &fired) == 0.25);
  CHECK(!fired);

  SymbolicTree lg = SymbolicTree::unary(prim(PrimKind::Log),
                                        SymbolicTree::leaf(var(1)));
  fired = false;
  CHECK(evaluate_tree(lg, x, &fired) ==
        doctest::Approx(std::log(1e-6)).epsilon(1e-12));
  CHECK(fired);

  // exp clamp engages through composition: exp(exp(exp(x))) at x=2
  SymbolicTree ee = SymbolicTree::unary(
      prim(PrimKind::Exp),
      SymbolicTree::unary(prim(PrimKind::Exp),
                          SymbolicTree::unary(prim(PrimKind::Exp),
                                              SymbolicTree::leaf(var(0)))));
  std::vector<double> two = {2.0, 0.0};
  fired = false;
  CHECK(evaluate_tree(ee, two, &fired) ==
        doctest::Approx(std::exp(50.0)).epsilon(1e-12));
  CHECK(fired);

  SymbolicTree p = SymbolicTree::unary(prim(PrimKind::Pass), t_add_x0_x1());
  std::vector<double> xy = {2.5, 3.5};
  CHECK(evaluate_tree(p, xy) == 6.0);
}

TEST_CASE("batch evaluation matches per-sample evaluation") {
  Rng rng(11);
  PrimitiveSet ps = PrimitiveSet::canonical(2);
  for (int it = 0; it < 20; ++it) {
    SymbolicTree t = random_tree(rng, {1, 4}, GrowMethod::Grow, ps);
    ColMatrix X(9, 2);
    for (std::size_t i = 0; i < 9; ++i)
      for (std::size_t j = 0; j < 2; ++j) X.at(i, j) = rng.uniform(-3.0, 3.0);
    std::vector<double> out(9);
    evaluate_tree_batch(t, X, out);
    for (std::size_t i = 0; i < 9; ++i) {
      std::vector<double> x = {X.at(i, 0), X.at(i, 1)};
      CHECK(out[i] == evaluate_tree(t, x));
    }
  }
}

TEST_CASE("random trees respect depth bounds and never contain Pass") {
  PrimitiveSet ps = PrimitiveSet::canonical(2);
  Rng rng(3);
  std::set<int> grow_depths, full_depths;
  for (int i = 0; i < 1000; ++i) {
    SymbolicTree g = random_tree(rng, {1, 3}, GrowMethod::Grow, ps);
    CHECK(g.structurally_valid());
    CHECK(g.depth() >= 1);
    CHECK(g.depth() <= 3);
    grow_depths.insert(g.depth());
    for (const auto& n : g.nodes()) CHECK(n.prim.kind != PrimKind::Pass);

    SymbolicTree f = random_tree(rng, {1, 3}, GrowMethod::Full, ps);
    CHECK(f.structurally_valid());
    CHECK(f.depth() >= 1);
    CHECK(f.depth() <= 3);
    full_depths.insert(f.depth());
    // full trees have every leaf at the target depth
    for (int i2 = 0; i2 < f.size(); ++i2)
      if (f.node(i2).prim.is_terminal()) CHECK(f.depth_of(i2) == f.depth());
  }
  // the ramp actually ramps
  CHECK(grow_depths.size() == 3);
  CHECK(full_depths.size() == 3);

  SymbolicTree leaf = random_tree(rng, {0, 0}, GrowMethod::Grow, ps);
  CHECK(leaf.size() == 1);
}

TEST_CASE("simplify removes Pass chains and nothing else") {
  SymbolicTree inner = t_add_x0_x1();
  SymbolicTree wrapped = SymbolicTree::unary(
      prim(PrimKind::Pass),
      SymbolicTree::unary(prim(PrimKind::Pass), inner));
  SymbolicTree s = simplify(wrapped);
  CHECK(to_prefix(s) == "(+ x0 x1)");
  CHECK(tree_size(s) <= tree_size(wrapped));

  // Pass buried mid-tree
  SymbolicTree mid = SymbolicTree::binary(
      prim(PrimKind::Mul),
      SymbolicTree::unary(prim(PrimKind::Pass), SymbolicTree::leaf(var(0))),
      SymbolicTree::leaf(var(1)));
  CHECK(to_prefix(simplify(mid)) == "(* x0 x1)");

  // semantics preserved on a protection-free sample
  Rng rng(5);
  PrimitiveSet ps = PrimitiveSet::canonical(2);
  for (int i = 0; i < 50; ++i) {
    SymbolicTree t = random_tree(rng, {1, 4}, GrowMethod::Grow, ps);
    SymbolicTree t2 = simplify(t);
    CHECK(t2.structurally_valid());
    CHECK(tree_size(t2) <= tree_size(t));
    std::vector<double> x = {rng.uniform(0.1, 2.0), rng.uniform(0.1, 2.0)};
    bool f1 = false, f2 = false;
    double v1 = evaluate_tree(t, x, &f1);
    double v2 = evaluate_tree(t2, x, &f2);
    if (!f1 && !f2) CHECK(v1 == doctest::Approx(v2).epsilon(1e-12));
  }
}

TEST_CASE("subtree surgery") {
  SymbolicTree t = SymbolicTree::binary(
      prim(PrimKind::Mul), SymbolicTree::unary(prim(PrimKind::Sin),
                                               SymbolicTree::leaf(var(0))),
      SymbolicTree::leaf(var(1)));
  // preorder after normalization: 0:* 1:sin 2:x0 3:x1
  SymbolicTree n = t.normalized();
  CHECK(n.root() == 0);
  CHECK(n.node(0).prim.kind == PrimKind::Mul);

  SymbolicTree sub = n.subtree(1);
  CHECK(to_prefix(sub) == "(sin x0)");
  CHECK(n.subtree_size(1) == 2);

  SymbolicTree rep = n.with_subtree(1, t_add_x0_x1());
  CHECK(to_prefix(rep) == "(* (+ x0 x1) x1)");
  CHECK(rep.structurally_valid());
}

TEST_CASE("prefix serialization round trip") {
  Rng rng(17);
  PrimitiveSet ps = PrimitiveSet::canonical(3);
  for (int i = 0; i < 200; ++i) {
    SymbolicTree t = random_tree(rng, {0, 5}, GrowMethod::Grow, ps);
    SymbolicTree back = parse_prefix(to_prefix(t));
    CHECK(to_prefix(back) == to_prefix(t));
  }
  CHECK(to_prefix(parse_prefix("  (+  x0\n  x1 )")) == "(+ x0 x1)");
  CHECK(to_prefix(parse_prefix("(pass (log (/ x0 x2)))")) ==
        "(pass (log (/ x0 x2)))");

  CHECK_THROWS_AS((void)parse_prefix(""), ContractViolation);
  CHECK_THROWS_AS((void)parse_prefix("(+ x0"), ContractViolation);
  CHECK_THROWS_AS((void)parse_prefix("(+ x0 x1"), ContractViolation);
  CHECK_THROWS_AS((void)parse_prefix("(sin x0 x1)"), ContractViolation);
  CHECK_THROWS_AS((void)parse_prefix("(bogus x0 x1)"), ContractViolation);
  CHECK_THROWS_AS((void)parse_prefix("(+ x0 x1) junk"), ContractViolation);
  CHECK_THROWS_AS((void)parse_prefix("x"), ContractViolation);
}

TEST_CASE("numeric equivalence") {
  Domain dom;
  dom.ranges = {{-1.0, 1.0}, {-1.0, 1.0}};
  Rng rng(23);

  SymbolicTree a = t_add_x0_x1();
  SymbolicTree b = SymbolicTree::binary(prim(PrimKind::Add),
                                        SymbolicTree::leaf(var(1)),
                                        SymbolicTree::leaf(var(0)));
  CHECK(numeric_equiv(a, b, dom, rng));

  SymbolicTree c = SymbolicTree::binary(prim(PrimKind::Sub),
                                        SymbolicTree::leaf(var(0)),
                                        SymbolicTree::leaf(var(1)));
  CHECK(!numeric_equiv(a, c, dom, rng));

  SymbolicTree wrapped = SymbolicTree::unary(prim(PrimKind::Pass), a);
  CHECK(numeric_equiv(wrapped, a, dom, rng));

  // identical trees that live entirely behind a protection are indeterminate,
  // which reports as not equivalent
  SymbolicTree pole = SymbolicTree::binary(
      prim(PrimKind::Div), SymbolicTree::leaf(var(0)),
      SymbolicTree::binary(prim(PrimKind::Sub), SymbolicTree::leaf(var(0)),
                           SymbolicTree::leaf(var(0))));
  CHECK(!numeric_equiv(pole, pole, dom, rng));

  // one-dimensional domain, deterministic grid
  Domain d1;
  d1.ranges = {{0.0, 2.0}};
  SymbolicTree sx = SymbolicTree::unary(prim(PrimKind::Sin),
                                        SymbolicTree::leaf(var(0)));
  CHECK(numeric_equiv(sx, sx, d1, rng));
  SymbolicTree cx = SymbolicTree::unary(prim(PrimKind::Cos),
                                        SymbolicTree::leaf(var(0)));
  CHECK(!numeric_equiv(sx, cx, d1, rng));
}
