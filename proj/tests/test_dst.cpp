#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "dgp/dst.hpp"
#include "dgp/expr.hpp"

using namespace dgp;

namespace {

SymbolicTree t_add_x0_x1() {
  return SymbolicTree::binary(prim(PrimKind::Add), SymbolicTree::leaf(var(0)),
                              SymbolicTree::leaf(var(1)));
}

// sets a row to -40 everywhere, then the given (column, logit) pairs
void set_row(NodeMatrix& nm, int i,
             const std::vector<std::pair<int, double>>& hot) {
  auto row = nm.row(i);
  for (auto& v : row) v = -40.0;
  for (auto [c, l] : hot) row[static_cast<std::size_t>(c)] = l;
}

}  // namespace

TEST_CASE("relax puts the advertised mass on the node's own primitive") {
  PrimitiveSet ps = PrimitiveSet::canonical(2);
  SymbolicTree t = t_add_x0_x1();
  DiffSymbolicTree dst = relax(t, ps, InitConfig{});

  CHECK(dst.node_count() == 3);
  CHECK(dst.nodes().rows() == 3);
  CHECK(dst.nodes().cols() == 11);

  // softmax of one 4.0 logit against ten zeros
  const double expect = std::exp(4.0) / (std::exp(4.0) + 10.0);
  std::vector<double> w(11);
  for (int i = 0; i < 3; ++i) {
    dst.nodes().softmax_row(i, w);
    double sum = 0.0;
    for (double v : w) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    int own = dst.prims().column_of(dst.tree().node(i).prim);
    CHECK(w[static_cast<std::size_t>(own)] ==
          doctest::Approx(expect).epsilon(1e-12));
  }

  // every edge starts at sigmoid(2)
  const double s2 = 1.0 / (1.0 + std::exp(-2.0));
  const auto& adj = dst.adjacency();
  CHECK(adj.nodes() == 3);
  CHECK(!adj.has_edge(adj.root()));
  for (int c = 0; c < 3; ++c)
    if (adj.has_edge(c)) CHECK(adj.strength(c) == doctest::Approx(s2).epsilon(1e-12));
  CHECK(s2 == doctest::Approx(0.8807970779778823).epsilon(1e-12));
}

TEST_CASE("adjacency accessors") {
  SymbolicTree t = SymbolicTree::unary(prim(PrimKind::Sin), t_add_x0_x1());
  PrimitiveSet ps = PrimitiveSet::canonical(2);
  DiffSymbolicTree dst = relax(t, ps, InitConfig{});
  AdjacencyMatrix& adj = dst.adjacency();

  int child = -1;
  for (int c = 0; c < dst.node_count(); ++c)
    if (adj.has_edge(c)) { child = c; break; }
  REQUIRE(child >= 0);

  adj.set_logit(child, 0.0);
  CHECK(adj.strength(child) == 0.5);
  CHECK(adj.logit(child) == 0.0);

  const SymbolicTree& nt = dst.tree();
  int parent = nt.node(child).parent;
  CHECK(adj.strength_between(child, parent, nt) == 0.5);
  CHECK(adj.strength_between(parent, child, nt) == 0.0);  // not an edge
}

TEST_CASE("mix_node blends primitives by weight") {
  PrimitiveSet ps = PrimitiveSet::canonical(2);
  SymbolicTree t = t_add_x0_x1();
  DiffSymbolicTree dst = relax(t, ps, InitConfig{});

  // root mixes Add and Mul 60/40; edges forced to strength 1
  for (int c = 0; c < 3; ++c)
    if (dst.adjacency().has_edge(c)) dst.adjacency().set_logit(c, 40.0);
  set_row(dst.nodes(), 0,
          {{ps.column_of(prim(PrimKind::Add)), std::log(0.6)},
           {ps.column_of(prim(PrimKind::Mul)), std::log(0.4)}});

  std::vector<double> w(11);
  dst.nodes().softmax_row(0, w);
  std::vector<double> children = {5.0, 6.0};
  std::vector<double> x = {0.0, 0.0};
  double got = mix_node(dst, 0, w, children, x);
  CHECK(got == doctest::Approx(0.6 * 11.0 + 0.4 * 30.0).epsilon(1e-9));

  // a leaf row splitting mass over both terminals reads the inputs directly
  set_row(dst.nodes(), 1,
          {{ps.terminal_columns()[0], 0.0}, {ps.terminal_columns()[1], 0.0}});
  dst.nodes().softmax_row(1, w);
  std::vector<double> none;
  std::vector<double> x2 = {2.0, 4.0};
  CHECK(mix_node(dst, 1, w, none, x2) == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("relaxation at saturating logits reproduces the discrete tree") {
  PrimitiveSet ps2 = PrimitiveSet::canonical(2);
  PrimitiveSet ps1 = PrimitiveSet::canonical(1);
  Rng rng(31);
  InitConfig sharp{40.0, 40.0, true};

  int checked = 0, skipped = 0;
  for (int it = 0; it < 70; ++it) {
    const PrimitiveSet& ps = (it % 2 == 0) ? ps2 : ps1;
    SymbolicTree t = random_tree(rng, {1, 4}, GrowMethod::Grow, ps);
    DiffSymbolicTree dst = relax(t, ps, sharp);
    for (int s = 0; s < 4; ++s) {
      std::vector<double> x(ps.dims());
      for (auto& v : x) v = rng.uniform(-2.0, 2.0);
      bool fired = false;
      double truth = evaluate_tree(t, x, &fired);
      // protection floors amplify the residual mixture mass unboundedly, so
      // fired points are indeterminate here just as they are in numeric_equiv
      if (fired) {
        ++skipped;
        continue;
      }
      // so are points with intermediates beyond the convergence horizon: a
      // subtree value v reaching a phantom exp column contributes
      // ~e^(min(v,50)-40) through the e^-40 residual mass
      double vmax = 0.0;
      for (int k = 0; k < t.size(); ++k) {
        bool sub_fired = false;
        vmax = std::max(vmax,
                        std::fabs(evaluate_tree(t.subtree(k), x, &sub_fired)));
      }
      if (vmax > 30.0) {
        ++skipped;
        continue;
      }
      double relaxed = forward_one(dst, x);
      CHECK(std::fabs(relaxed - truth) <= 1e-3 * (1.0 + std::fabs(truth)));
      ++checked;
    }
  }
  CHECK(checked >= 200);
  // same majority rule as numeric_equiv: most points must be comparable
  CHECK(2 * skipped < checked + skipped);
}

TEST_CASE("forward_batch agrees with forward_one exactly") {
  PrimitiveSet ps = PrimitiveSet::canonical(2);
  Rng rng(57);
  for (int it = 0; it < 25; ++it) {
    SymbolicTree t = random_tree(rng, {1, 4}, GrowMethod::Grow, ps);
    DiffSymbolicTree dst = relax(t, ps, InitConfig{});
    // jitter all parameters so the mixture is not at its init point
    for (double& v : dst.nodes().flat()) v += rng.uniform(-1.0, 1.0);
    for (double& v : dst.adjacency().flat()) v += rng.uniform(-1.0, 1.0);

    ColMatrix X(7, 2);
    for (std::size_t i = 0; i < 7; ++i)
      for (std::size_t j = 0; j < 2; ++j) X.at(i, j) = rng.uniform(-2.0, 2.0);

    ForwardTrace trace;
    forward_batch(dst, X, trace);
    CHECK(trace.batch == 7);
    CHECK(trace.nodes == dst.node_count());
    auto yhat = trace.yhat(dst);
    for (std::size_t i = 0; i < 7; ++i) {
      std::vector<double> x = {X.at(i, 0), X.at(i, 1)};
      CHECK(yhat[i] == forward_one(dst, x));
    }
    // trace weights are proper distributions
    for (int n = 0; n < trace.nodes; ++n) {
      double sum = 0.0;
      for (int j = 0; j < trace.prims; ++j) sum += trace.w_row(n)[j];
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("softmax_row is shift invariant and stable at extreme logits") {
  NodeMatrix nm(1, 4);
  auto row = nm.row(0);
  row[0] = 1000.0;
  row[1] = 999.0;
  row[2] = -1000.0;
  row[3] = 0.0;
  std::vector<double> w(4);
  nm.softmax_row(0, w);
  CHECK(std::isfinite(w[0]));
  CHECK(w[0] > w[1]);
  CHECK(w[2] == doctest::Approx(0.0));
  CHECK(w[0] + w[1] + w[2] + w[3] == doctest::Approx(1.0).epsilon(1e-12));

  // shifting all logits leaves the distribution unchanged
  NodeMatrix nm2(1, 4);
  auto r2 = nm2.row(0);
  for (int j = 0; j < 4; ++j) r2[j] = row[j] - 500.0;
  std::vector<double> w2(4);
  nm2.softmax_row(0, w2);
  for (int j = 0; j < 4; ++j) CHECK(w[j] == doctest::Approx(w2[j]).epsilon(1e-12));
}

TEST_CASE("dump is a readable parameter report") {
  PrimitiveSet ps = PrimitiveSet::canonical(2);
  DiffSymbolicTree dst = relax(t_add_x0_x1(), ps, InitConfig{});
  std::string s = dump(dst);
  CHECK(!s.empty());
  CHECK(s.find('+') != std::string::npos);
  CHECK(s.find("x0") != std::string::npos);
}
