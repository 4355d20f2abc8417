#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dgp/config.hpp"
#include "dgp/data.hpp"
#include "dgp/engine.hpp"
#include "dgp/metrics.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "dgp 0.1.0";

// rng stream tags, disjoint from the engine's
constexpr std::uint64_t kTagSplit = 101;
constexpr std::uint64_t kTagSynthData = 102;
constexpr std::uint64_t kTagNoise = 103;
constexpr std::uint64_t kTagEquiv = 104;

struct CommonOpts {
  std::uint64_t seed = 0;
  int threads = 0;
  bool quiet = false;
};

void progress(const CommonOpts& c, const std::string& line) {
  if (!c.quiet) std::fprintf(stderr, "%s\n", line.c_str());
}

ojson history_json(const dgp::RunResult& res) {
  ojson h = ojson::array();
  for (const auto& s : res.history) {
    h.push_back({{"iteration", s.iteration},
                 {"best_train_nrmse", s.best_train_nrmse},
                 {"evaluations_used", s.evaluations_used}});
  }
  return h;
}

ojson result_json(const dgp::RunResult& res) {
  ojson r;
  r["best_expression"] = dgp::to_prefix(res.best_tree);
  r["best_expression_simplified"] = dgp::to_prefix(dgp::simplify(res.best_tree));
  r["best_train_nrmse"] = res.best_train_nrmse;
  r["final_best_expression"] = dgp::to_prefix(res.final_best_tree);
  r["final_best_train_nrmse"] = res.final_best_train_nrmse;
  r["test_r2"] = res.test_r2;
  r["test_rmse"] = res.test_rmse;
  r["test_nrmse"] = res.test_nrmse;
  r["program_size"] = res.program_size;
  r["evaluations_used"] = res.evaluations_used;
  r["iterations_completed"] = res.iterations_completed;
  r["early_stopped"] = res.early_stopped;
  r["history"] = history_json(res);
  r["wall_time_sec"] = res.wall_time_sec;
  return r;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out.good())
    throw dgp::ContractViolation("cannot write output file: " + path.string());
  out << text;
}

std::string format_noise(double g) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", g);
  return buf;
}

dgp::TrialRecord to_record(const dgp::RunResult& res, bool recovered) {
  dgp::TrialRecord t;
  t.seed = res.seed;
  t.train_nrmse = res.best_train_nrmse;
  t.test_r2 = res.test_r2;
  t.test_rmse = res.test_rmse;
  t.test_nrmse = res.test_nrmse;
  t.recovered = recovered;
  t.program_size = res.program_size;
  t.evaluations_used = res.evaluations_used;
  t.wall_time_sec = res.wall_time_sec;
  t.expression = dgp::to_prefix(dgp::simplify(res.best_tree));
  return t;
}

int cmd_fit(const std::string& data_path, const std::string& target,
            const std::string& config_path, const std::string& out_path,
            const CommonOpts& com) {
  dgp::RunConfig rc = dgp::default_run_config();
  if (!config_path.empty()) rc = dgp::load_run_config(config_path, rc);

  dgp::Dataset ds = dgp::load_csv(data_path, target);
  dgp::Rng split_rng(dgp::Rng::derive(com.seed, 0, 0, kTagSplit));
  dgp::split(ds, rc.data.train_fraction, split_rng);

  dgp::EngineConfig ec = rc.engine;
  ec.seed = com.seed;
  ec.threads = com.threads;
  progress(com, "fit: n=" + std::to_string(ds.n()) + " d=" + std::to_string(ds.d()) +
                    " train=" + std::to_string(ds.train_idx.size()));
  dgp::RunResult res = dgp::dgp_run(ds, ec);

  ojson art;
  art["version"] = kVersion;
  art["command"] = "fit";
  art["seed"] = com.seed;
  art["data"] = {{"path", data_path},
                 {"target", ds.target_name},
                 {"n", ds.n()},
                 {"d", ds.d()},
                 {"n_train", ds.train_idx.size()},
                 {"n_test", ds.test_idx.size()}};
  art["config"] = ojson::parse(dgp::run_config_json(rc));
  art["result"] = result_json(res);
  write_text(out_path, art.dump(2) + "\n");
  progress(com, "fit: best " + dgp::to_prefix(dgp::simplify(res.best_tree)) +
                    " train_nrmse=" + std::to_string(res.best_train_nrmse));
  return 0;
}

int cmd_synth(const std::string& bench_name, std::size_t trials,
              std::optional<double> noise, bool noise_sweep,
              const std::string& method, const std::string& config_path,
              const std::string& out_dir, const CommonOpts& com) {
  auto bench = dgp::parse_benchmark(bench_name);
  if (!bench) throw dgp::ContractViolation("unknown benchmark: " + bench_name);
  DGP_CHECK(trials >= 1, "need at least one trial");
  DGP_CHECK(method == "dgp" || method == "gp", "method must be dgp or gp");

  dgp::RunConfig rc = dgp::synthetic_run_config();
  if (!config_path.empty()) rc = dgp::load_run_config(config_path, rc);

  std::vector<double> levels;
  if (noise_sweep)
    levels = rc.noise.sweep;
  else if (noise)
    levels = {*noise};
  else
    levels = {rc.noise.level};
  for (double g : levels)
    DGP_CHECK(g >= 0, "noise level must be >= 0");

  fs::create_directories(out_dir);
  std::vector<dgp::AggregateRow> agg_rows;

  for (double gamma : levels) {
    const fs::path level_dir = fs::path(out_dir) / ("noise_" + format_noise(gamma));
    fs::create_directories(level_dir);
    std::vector<dgp::TrialRecord> records;

    for (std::size_t i = 0; i < trials; ++i) {
      const std::uint64_t tseed = com.seed + i;

      dgp::Rng gen_rng(dgp::Rng::derive(tseed, 0, 0, kTagSynthData));
      dgp::SyntheticSpec sspec{*bench, rc.data.points};
      dgp::Dataset ds = dgp::generate_synthetic(sspec, gen_rng);
      if (gamma > 0.0) {
        dgp::Rng noise_rng(dgp::Rng::derive(tseed, 0, 0, kTagNoise));
        dgp::NoiseSpec nspec{gamma, rc.noise.noise_test_targets};
        dgp::add_noise(ds, nspec, noise_rng);
      }

      dgp::EngineConfig ec = rc.engine;
      ec.seed = tseed;
      ec.threads = com.threads;
      dgp::RunResult res =
          method == "gp" ? dgp::canonical_gp_run(ds, ec) : dgp::dgp_run(ds, ec);

      dgp::Rng eq_rng(dgp::Rng::derive(tseed, 0, 0, kTagEquiv));
      const bool recovered = dgp::numeric_equiv(
          dgp::simplify(res.best_tree), *ds.ground_truth, *ds.domain, eq_rng);
      records.push_back(to_record(res, recovered));

      ojson art;
      art["version"] = kVersion;
      art["command"] = "synth";
      art["benchmark"] = dgp::benchmark_name(*bench);
      art["method"] = method;
      art["noise"] = gamma;
      art["seed"] = tseed;
      art["ground_truth"] = dgp::to_prefix(*ds.ground_truth);
      art["recovered"] = recovered;
      art["config"] = ojson::parse(dgp::run_config_json(rc));
      art["result"] = result_json(res);
      write_text(level_dir / ("trial_seed" + std::to_string(tseed) + ".json"),
                 art.dump(2) + "\n");

      progress(com, "synth " + dgp::benchmark_name(*bench) + " " + method +
                        " noise=" + format_noise(gamma) + " trial " +
                        std::to_string(i + 1) + "/" + std::to_string(trials) +
                        (recovered ? " recovered" : " not recovered"));
    }

    dgp::TrialSummary summary = dgp::aggregate(records);
    std::ofstream per_seed(level_dir / "per_seed.csv");
    dgp::write_per_seed_csv(per_seed, summary);
    agg_rows.push_back({dgp::benchmark_name(*bench), method, gamma, summary});
  }

  std::ofstream agg(fs::path(out_dir) / "aggregate.csv");
  dgp::write_aggregate_csv(agg, agg_rows);
  for (const auto& row : agg_rows) {
    progress(com, "synth " + row.benchmark + " " + row.method + " noise=" +
                      format_noise(row.noise) + " recovery=" +
                      std::to_string(row.summary.recovery) + "%");
  }
  return 0;
}

int cmd_eval(const std::string& expr_text, const std::string& data_path,
             const std::string& target) {
  dgp::SymbolicTree t = dgp::parse_prefix(expr_text);
  dgp::Dataset ds = dgp::load_csv(data_path, target);
  const int mv = t.max_var();
  if (mv >= static_cast<int>(ds.d()))
    throw dgp::ContractViolation("expression references x" + std::to_string(mv) +
                                 " but the dataset has only " +
                                 std::to_string(ds.d()) + " features");

  std::vector<double> pred(ds.n());
  dgp::evaluate_tree_batch(t, ds.X, pred);
  std::printf("r2 %.17g\n", dgp::r2(ds.y, pred));
  std::printf("rmse %.17g\n", dgp::rmse(ds.y, pred));
  std::printf("nrmse %.17g\n", dgp::nrmse(ds.y, pred));
  std::printf("program_size %d\n", dgp::simplify(t).size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symbolic regression by differentiable relaxation of expression trees"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  CommonOpts com;
  app.add_flag("--quiet", com.quiet, "suppress progress lines on stderr");
  app.add_option("--threads", com.threads, "worker threads (0 = all cores)")
      ->envname("DGP_THREADS");

  auto* fit = app.add_subcommand("fit", "fit a dataset from CSV");
  fit->fallthrough();
  std::string fit_data, fit_target, fit_config, fit_out = "result.json";
  fit->add_option("--data", fit_data, "CSV file with a header row")->required();
  fit->add_option("--target", fit_target, "target column (default: last)");
  fit->add_option("--config", fit_config, "JSON config file");
  fit->add_option("--seed", com.seed, "random seed");
  fit->add_option("--out", fit_out, "output artifact path");

  auto* synth = app.add_subcommand("synth", "run a synthetic benchmark");
  synth->fallthrough();
  std::string sy_bench, sy_method = "dgp", sy_config, sy_out = "synth_out";
  std::size_t sy_trials = 10;
  double sy_noise = 0.0;
  bool sy_sweep = false;
  synth->add_option("--bench", sy_bench, "benchmark S1..S6")->required();
  synth->add_option("--trials", sy_trials, "number of seeded trials");
  auto* noise_opt = synth->add_option("--noise", sy_noise, "noise level gamma");
  synth->add_flag("--noise-sweep", sy_sweep, "run the full default noise grid");
  synth->add_option("--method", sy_method, "dgp or gp");
  synth->add_option("--config", sy_config, "JSON config file");
  synth->add_option("--seed", com.seed, "base seed; trial i uses seed+i");
  synth->add_option("--out", sy_out, "output directory");

  auto* ev = app.add_subcommand("eval", "evaluate an expression on a dataset");
  ev->fallthrough();
  std::string ev_expr, ev_data, ev_target;
  ev->add_option("--expr", ev_expr, "expression in prefix form")->required();
  ev->add_option("--data", ev_data, "CSV file with a header row")->required();
  ev->add_option("--target", ev_target, "target column (default: last)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(fit))
      return cmd_fit(fit_data, fit_target, fit_config, fit_out, com);
    if (app.got_subcommand(synth)) {
      std::optional<double> noise;
      if (noise_opt->count() > 0) noise = sy_noise;
      return cmd_synth(sy_bench, sy_trials, noise, sy_sweep, sy_method,
                       sy_config, sy_out, com);
    }
    if (app.got_subcommand(ev)) return cmd_eval(ev_expr, ev_data, ev_target);
  } catch (const dgp::DegenerateTargetError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
