#include "dgp/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <utility>

#include "dgp/metrics.hpp"

namespace dgp {

namespace {

// rng stream tags so no two purposes ever share a sequence
constexpr std::uint64_t kTagInit = 1;
constexpr std::uint64_t kTagTrain = 2;
constexpr std::uint64_t kTagSample = 3;
constexpr std::uint64_t kTagDiversify = 4;

double pop_sigma(std::span<const double> v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

struct Driver {
  const Dataset& ds;
  EngineConfig cfg;  // local copy, caps propagated
  PrimitiveSet ps;
  ColMatrix Xtr;
  std::vector<double> ytr;

  double used = 0.0;
  SymbolicTree best_tree = SymbolicTree::leaf(var(0));
  double best_fit = std::numeric_limits<double>::infinity();
  std::vector<Individual> pool;
  RunResult res;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  Driver(const Dataset& d, const EngineConfig& c)
      : ds(d), cfg(c), ps(PrimitiveSet::canonical(d.d())) {
    DGP_CHECK(cfg.population_size >= 1, "population_size must be at least 1");
    DGP_CHECK(cfg.max_evaluations > 0, "max_evaluations must be positive");
    DGP_CHECK(ds.has_split(), "dataset needs a train split");
    DGP_CHECK(ds.train_idx.size() >= 2, "need at least 2 training samples");
    cfg.sample.max_nodes = cfg.max_nodes;
    cfg.sample.max_depth = cfg.max_depth;
    cfg.genetic.max_nodes = cfg.max_nodes;
    cfg.genetic.max_depth = cfg.max_depth;

    Xtr = ds.gather_x(ds.train_idx);
    ytr = ds.gather_y(ds.train_idx);
    if (pop_sigma(ytr) == 0.0)
      throw DegenerateTargetError("degenerate target: constant y");
  }

  double fitness(const SymbolicTree& t) const {
    std::vector<double> pred(ytr.size());
    evaluate_tree_batch(t, Xtr, pred);
    return nrmse(ytr, pred);
  }

  void note(const SymbolicTree& t, double f) {
    if (f < best_fit) {
      best_fit = f;
      best_tree = t;
    }
  }

  void scan_pool() {
    for (const auto& ind : pool) note(ind.tree, ind.fitness);
  }

  bool hit_early() const { return best_fit < cfg.early_stop_nrmse; }

  void record(std::size_t iteration) {
    res.history.push_back({iteration, best_fit, used});
  }

  // evaluates as many leading trees as the remaining budget affords
  std::size_t batch_evaluate(const std::vector<const SymbolicTree*>& trees,
                             std::vector<double>& fit) {
    const double rem = cfg.max_evaluations - used;
    std::size_t grant = 0;
    if (rem >= 1.0)
      grant = std::min(trees.size(), static_cast<std::size_t>(rem));
    parallel_for(grant, cfg.threads,
                 [&](std::size_t k) { fit[k] = fitness(*trees[k]); });
    used += static_cast<double>(grant);
    return grant;
  }

  void init_wave() {
    Rng rng(Rng::derive(cfg.seed, 0, 0, kTagInit));
    pool = initialize_population(cfg, ps, rng);
    // the initialization wave always completes, even on a tiny budget
    parallel_for(pool.size(), cfg.threads,
                 [&](std::size_t i) { pool[i].fitness = fitness(pool[i].tree); });
    used += static_cast<double>(pool.size());
    scan_pool();
    record(0);
  }

  void finish() {
    std::size_t fb = 0;
    for (std::size_t i = 1; i < pool.size(); ++i)
      if (pool[i].fitness < pool[fb].fitness) fb = i;
    res.final_best_tree = pool[fb].tree;
    res.final_best_train_nrmse = pool[fb].fitness;

    res.best_tree = best_tree;
    res.best_train_nrmse = best_fit;
    res.early_stopped = hit_early();
    res.evaluations_used = used;
    res.program_size = static_cast<std::size_t>(simplify(best_tree).size());
    res.seed = cfg.seed;
    res.config = cfg;

    if (!ds.test_idx.empty()) {
      ColMatrix Xte = ds.gather_x(ds.test_idx);
      std::vector<double> yte = ds.gather_y(ds.test_idx);
      std::vector<double> pred(yte.size());
      evaluate_tree_batch(best_tree, Xte, pred);
      res.test_rmse = rmse(yte, pred);
      try {
        res.test_nrmse = nrmse(yte, pred);
      } catch (const DegenerateTargetError&) {
      }
      try {
        res.test_r2 = r2(yte, pred);
      } catch (const std::exception&) {
      }
    }
    res.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
  }
};

}  // namespace

std::vector<Individual> initialize_population(const EngineConfig& cfg,
                                              const PrimitiveSet& ps, Rng& rng) {
  DGP_CHECK(cfg.init_depth.min >= 0 && cfg.init_depth.min <= cfg.init_depth.max,
            "bad init depth range");
  const int span = cfg.init_depth.max - cfg.init_depth.min + 1;
  std::vector<Individual> pop(cfg.population_size);
  for (std::size_t i = 0; i < pop.size(); ++i) {
    DepthRange d;
    d.min = d.max = cfg.init_depth.min + static_cast<int>((i / 2) % span);
    GrowMethod m = (i % 2 == 0) ? GrowMethod::Full : GrowMethod::Grow;
    pop[i].tree = random_tree(rng, d, m, ps);
  }
  return pop;
}

RunResult dgp_run(const Dataset& ds, const EngineConfig& cfg) {
  Driver dr(ds, cfg);
  dr.init_wave();

  const double cap = dr.cfg.max_evaluations;
  const std::size_t P = dr.pool.size();

  std::size_t it = 0;
  while (!dr.hit_early() && dr.used < cap) {
    ++it;
    const double before = dr.used;

    // serial budget planning so parallel execution cannot affect accounting
    std::vector<int> epochs(P, 0);
    std::vector<std::size_t> samples(P, 0);
    double planned = dr.used;
    for (std::size_t i = 0; i < P; ++i) {
      const double rem = cap - planned;
      if (rem <= 0.0) continue;
      int e = dr.cfg.train.epochs;
      if (dr.cfg.epoch_eval_cost > 0.0) {
        const double affordable = std::floor(rem / dr.cfg.epoch_eval_cost);
        e = static_cast<int>(std::min<double>(e, affordable));
      }
      const double rem2 = rem - e * dr.cfg.epoch_eval_cost;
      std::size_t s = 0;
      if (rem2 >= 1.0)
        s = std::min(dr.cfg.samples_per_dst, static_cast<std::size_t>(rem2));
      epochs[i] = e;
      samples[i] = s;
      planned += e * dr.cfg.epoch_eval_cost + static_cast<double>(s);
    }

    struct Cand {
      SymbolicTree tree;
      double fit = std::numeric_limits<double>::infinity();
      bool has = false;
    };
    std::vector<Cand> cand(P);
    parallel_for(P, dr.cfg.threads, [&](std::size_t i) {
      if (epochs[i] == 0 && samples[i] == 0) return;
      DiffSymbolicTree dst = relax(dr.pool[i].tree, dr.ps, dr.cfg.init);
      if (epochs[i] > 0) {
        TrainConfig tc = dr.cfg.train;
        tc.epochs = epochs[i];
        Rng rt(Rng::derive(dr.cfg.seed, it, i, kTagTrain));
        train_dst(dst, dr.Xtr, dr.ytr, tc, dr.cfg.loss, rt);
      }
      if (samples[i] == 0) return;
      Rng rs(Rng::derive(dr.cfg.seed, it, i, kTagSample));
      for (std::size_t k = 0; k < samples[i]; ++k) {
        SymbolicTree t = sample_tree(dst, rs, dr.cfg.sample);
        const double f = dr.fitness(t);
        if (!cand[i].has || f < cand[i].fit) {
          cand[i] = {std::move(t), f, true};
        }
      }
    });
    dr.used = planned;

    for (std::size_t i = 0; i < P; ++i) {
      if (!cand[i].has) continue;
      dr.pool[i].tree = std::move(cand[i].tree);
      dr.pool[i].fitness = cand[i].fit;
      dr.note(dr.pool[i].tree, dr.pool[i].fitness);
    }
    if (dr.hit_early()) {
      dr.record(it);
      dr.res.iterations_completed = it;
      break;
    }

    Rng rd(Rng::derive(dr.cfg.seed, it, 0, kTagDiversify));
    dr.pool = diversify(std::move(dr.pool), dr.cfg.genetic, dr.ps,
                        [&](const std::vector<const SymbolicTree*>& ts,
                            std::vector<double>& f) {
                          return dr.batch_evaluate(ts, f);
                        },
                        rd, dr.cfg.early_stop_nrmse);
    dr.scan_pool();
    dr.record(it);
    dr.res.iterations_completed = it;
    if (dr.used == before) break;  // budget too small to do anything
  }

  dr.finish();
  return dr.res;
}

RunResult canonical_gp_run(const Dataset& ds, const EngineConfig& cfg) {
  Driver dr(ds, cfg);
  dr.init_wave();

  GeneticConfig gen1 = dr.cfg.genetic;
  gen1.generations_per_iteration = 1;

  const double cap = dr.cfg.max_evaluations;
  std::size_t gen = 0;
  while (!dr.hit_early() && dr.used < cap) {
    ++gen;
    const double before = dr.used;
    Rng rd(Rng::derive(dr.cfg.seed, gen, 0, kTagDiversify));
    dr.pool = diversify(std::move(dr.pool), gen1, dr.ps,
                        [&](const std::vector<const SymbolicTree*>& ts,
                            std::vector<double>& f) {
                          return dr.batch_evaluate(ts, f);
                        },
                        rd, dr.cfg.early_stop_nrmse);
    dr.scan_pool();
    dr.record(gen);
    dr.res.iterations_completed = gen;
    if (dr.used == before) break;
  }

  dr.finish();
  return dr.res;
}

}  // namespace dgp
