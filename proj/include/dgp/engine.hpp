#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "dgp/common.hpp"
#include "dgp/data.hpp"
#include "dgp/dst.hpp"
#include "dgp/grad.hpp"
#include "dgp/sampler.hpp"

namespace dgp {

struct EngineConfig {
  std::size_t population_size = 500;
  double max_evaluations = 100000;
  double early_stop_nrmse = 1e-6;
  int max_nodes = 64;
  int max_depth = 8;
  // one training epoch costs this many evaluations; a discrete tree fitness
  // evaluation always costs one
  double epoch_eval_cost = 1.0;
  std::size_t samples_per_dst = 1;
  DepthRange init_depth{1, 3};

  TrainConfig train;
  LossConfig loss;
  SampleConfig sample;    // caps here are overwritten by the ones above
  GeneticConfig genetic;  // same
  InitConfig init;

  std::uint64_t seed = 0;
  int threads = 0;  // 0 picks hardware concurrency
};

struct IterationStat {
  std::size_t iteration = 0;  // 0 is the initialization wave
  double best_train_nrmse = 0.0;
  double evaluations_used = 0.0;
};

struct RunResult {
  SymbolicTree best_tree;  // best over every tree evaluated during the run
  double best_train_nrmse = std::numeric_limits<double>::infinity();
  SymbolicTree final_best_tree;  // best member of the final population
  double final_best_train_nrmse = std::numeric_limits<double>::infinity();

  // held-out metrics of best_tree; NaN when the dataset has no test split
  double test_r2 = std::numeric_limits<double>::quiet_NaN();
  double test_rmse = std::numeric_limits<double>::quiet_NaN();
  double test_nrmse = std::numeric_limits<double>::quiet_NaN();

  std::size_t program_size = 0;  // node count of the simplified best tree
  double evaluations_used = 0.0;
  std::size_t iterations_completed = 0;
  bool early_stopped = false;
  double wall_time_sec = 0.0;
  std::vector<IterationStat> history;
  std::uint64_t seed = 0;
  EngineConfig config;
};

/// Ramped half-and-half over cfg.init_depth. Trees only; fitness is left
/// infinite for the caller to fill in against its budget.
std::vector<Individual> initialize_population(const EngineConfig& cfg,
                                              const PrimitiveSet& ps, Rng& rng);

/// Full relax-train-sample-diversify loop until the evaluation budget runs
/// out or some tree's training NRMSE drops below early_stop_nrmse. All
/// randomness is pre-derived per (iteration, individual), so results are
/// identical for any thread count.
RunResult dgp_run(const Dataset& ds, const EngineConfig& cfg);

/// Generational GP baseline: same initialization, budget accounting, and
/// genetic operators, no relaxation or gradient training.
RunResult canonical_gp_run(const Dataset& ds, const EngineConfig& cfg);

}  // namespace dgp
