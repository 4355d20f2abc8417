#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "dgp/engine.hpp"

using namespace dgp;

namespace {

Dataset tiny_s4(std::uint64_t seed) {
  Rng rng(seed);
  return generate_synthetic({Benchmark::S4, 20}, rng);
}

EngineConfig tiny_config() {
  EngineConfig cfg;
  cfg.population_size = 8;
  cfg.max_evaluations = 600;
  cfg.train.epochs = 5;
  cfg.genetic.generations_per_iteration = 4;
  cfg.seed = 42;
  cfg.threads = 1;
  return cfg;
}

}  // namespace

TEST_CASE("initialize_population is ramped, capped, and seeded") {
  EngineConfig cfg;
  cfg.population_size = 60;
  cfg.init_depth = {1, 3};
  PrimitiveSet ps = PrimitiveSet::canonical(2);

  Rng rng(7);
  auto pop = initialize_population(cfg, ps, rng);
  REQUIRE(pop.size() == 60);

  std::set<int> depths;
  for (const auto& ind : pop) {
    CHECK(ind.tree.structurally_valid());
    CHECK(ind.tree.depth() >= 1);
    CHECK(ind.tree.depth() <= 3);
    CHECK(std::isinf(ind.fitness));
    for (const auto& n : ind.tree.nodes()) CHECK(n.prim.kind != PrimKind::Pass);
    depths.insert(ind.tree.depth());
  }
  // the ramp visits every depth in the range
  CHECK(depths.size() == 3);

  Rng rng2(7);
  auto pop2 = initialize_population(cfg, ps, rng2);
  for (std::size_t i = 0; i < pop.size(); ++i)
    CHECK(to_prefix(pop[i].tree) == to_prefix(pop2[i].tree));
}

TEST_CASE("dgp_run honors its budget and reports a consistent history") {
  Dataset ds = tiny_s4(3);
  EngineConfig cfg = tiny_config();
  RunResult res = dgp_run(ds, cfg);

  CHECK(res.evaluations_used <= cfg.max_evaluations + cfg.population_size);
  CHECK(res.evaluations_used > 0.0);
  CHECK(res.seed == 42);
  CHECK(res.config.population_size == 8);
  CHECK(res.iterations_completed + 1 == res.history.size());

  REQUIRE(!res.history.empty());
  CHECK(res.history.front().iteration == 0);
  double best_seen = res.history.front().best_train_nrmse;
  for (std::size_t i = 1; i < res.history.size(); ++i) {
    CHECK(res.history[i].iteration == i);
    // running best never regresses, evaluation counter never rewinds
    CHECK(res.history[i].best_train_nrmse <= res.history[i - 1].best_train_nrmse);
    CHECK(res.history[i].evaluations_used >= res.history[i - 1].evaluations_used);
    best_seen = std::min(best_seen, res.history[i].best_train_nrmse);
  }
  CHECK(res.best_train_nrmse == best_seen);
  CHECK(res.best_train_nrmse <= res.final_best_train_nrmse);

  CHECK(res.best_tree.structurally_valid());
  CHECK(res.best_tree.size() <= cfg.max_nodes);
  CHECK(res.best_tree.depth() <= cfg.max_depth);
  CHECK(std::isfinite(res.best_train_nrmse));
  CHECK(std::isfinite(res.test_rmse));
  CHECK(res.test_r2 <= 1.0);
  CHECK(res.program_size ==
        static_cast<std::size_t>(simplify(res.best_tree).size()));
  CHECK(res.wall_time_sec >= 0.0);
}

TEST_CASE("dgp_run is deterministic for any thread count") {
  Dataset ds = tiny_s4(3);
  EngineConfig cfg = tiny_config();

  RunResult a = dgp_run(ds, cfg);
  cfg.threads = 4;
  RunResult b = dgp_run(ds, cfg);

  CHECK(to_prefix(a.best_tree) == to_prefix(b.best_tree));
  CHECK(a.best_train_nrmse == b.best_train_nrmse);
  CHECK(a.evaluations_used == b.evaluations_used);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].best_train_nrmse == b.history[i].best_train_nrmse);
    CHECK(a.history[i].evaluations_used == b.history[i].evaluations_used);
  }
}

TEST_CASE("dgp_run stops early once a tree nails the target") {
  // y = x0 with a decoy second variable; an exact tree is easy to reach
  Rng rng(5);
  Dataset ds;
  ds.X = ColMatrix(40, 2);
  ds.y.resize(40);
  for (std::size_t i = 0; i < 40; ++i) {
    ds.X.at(i, 0) = rng.uniform(-2.0, 2.0);
    ds.X.at(i, 1) = rng.uniform(-2.0, 2.0);
    ds.y[i] = ds.X.at(i, 0);
  }
  split(ds, 0.75, rng);

  EngineConfig cfg;
  cfg.population_size = 16;
  cfg.max_evaluations = 20000;
  cfg.train.epochs = 5;
  cfg.seed = 1;
  cfg.threads = 1;
  RunResult res = dgp_run(ds, cfg);

  CHECK(res.early_stopped);
  CHECK(res.best_train_nrmse < cfg.early_stop_nrmse);
  CHECK(res.evaluations_used < 0.5 * cfg.max_evaluations);
}

TEST_CASE("canonical_gp_run shares the budget and determinism contract") {
  Dataset ds = tiny_s4(3);
  EngineConfig cfg = tiny_config();
  cfg.max_evaluations = 500;

  RunResult a = canonical_gp_run(ds, cfg);
  CHECK(a.evaluations_used <= cfg.max_evaluations + cfg.population_size);
  CHECK(a.history.front().iteration == 0);
  CHECK(a.best_train_nrmse <= a.history.front().best_train_nrmse);
  CHECK(a.best_tree.structurally_valid());
  CHECK(a.best_tree.size() <= cfg.max_nodes);

  RunResult b = canonical_gp_run(ds, cfg);
  CHECK(to_prefix(a.best_tree) == to_prefix(b.best_tree));
  CHECK(a.evaluations_used == b.evaluations_used);

  // generational history never regresses on the running best
  for (std::size_t i = 1; i < a.history.size(); ++i)
    CHECK(a.history[i].best_train_nrmse <= a.history[i - 1].best_train_nrmse);
}
