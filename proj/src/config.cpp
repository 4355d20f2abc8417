#include "dgp/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <string_view>

#include <json.hpp>

namespace dgp {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

void check_keys(const json& j, const std::string& prefix,
                std::initializer_list<std::string_view> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (auto a : allowed)
      if (it.key() == a) {
        known = true;
        break;
      }
    if (!known)
      throw ContractViolation("config: unknown key '" + prefix + it.key() + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, const std::string& prefix, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ContractViolation("config: bad value for '" + prefix + key + "'");
  }
}

void apply_json(RunConfig& rc, const json& j) {
  check_keys(j, "", {"engine", "train", "loss", "sample", "genetic", "init",
                     "data", "noise"});

  if (j.contains("engine")) {
    const json& e = j.at("engine");
    check_keys(e, "engine.",
               {"population_size", "max_evaluations", "early_stop_nrmse",
                "max_nodes", "max_depth", "epoch_eval_cost", "samples_per_dst",
                "init_depth_min", "init_depth_max"});
    read(e, "population_size", "engine.", rc.engine.population_size);
    read(e, "max_evaluations", "engine.", rc.engine.max_evaluations);
    read(e, "early_stop_nrmse", "engine.", rc.engine.early_stop_nrmse);
    read(e, "max_nodes", "engine.", rc.engine.max_nodes);
    read(e, "max_depth", "engine.", rc.engine.max_depth);
    read(e, "epoch_eval_cost", "engine.", rc.engine.epoch_eval_cost);
    read(e, "samples_per_dst", "engine.", rc.engine.samples_per_dst);
    read(e, "init_depth_min", "engine.", rc.engine.init_depth.min);
    read(e, "init_depth_max", "engine.", rc.engine.init_depth.max);
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    check_keys(t, "train.",
               {"epochs", "batch_size", "batches_per_epoch", "lr_node",
                "lr_edge", "adam_beta1", "adam_beta2", "adam_eps"});
    read(t, "epochs", "train.", rc.engine.train.epochs);
    read(t, "batch_size", "train.", rc.engine.train.batch_size);
    read(t, "batches_per_epoch", "train.", rc.engine.train.batches_per_epoch);
    read(t, "lr_node", "train.", rc.engine.train.lr_node);
    read(t, "lr_edge", "train.", rc.engine.train.lr_edge);
    read(t, "adam_beta1", "train.", rc.engine.train.adam_beta1);
    read(t, "adam_beta2", "train.", rc.engine.train.adam_beta2);
    read(t, "adam_eps", "train.", rc.engine.train.adam_eps);
  }
  if (j.contains("loss")) {
    const json& l = j.at("loss");
    check_keys(l, "loss.", {"lambda_01"});
    read(l, "lambda_01", "loss.", rc.engine.loss.lambda_01);
  }
  if (j.contains("sample")) {
    const json& s = j.at("sample");
    check_keys(s, "sample.", {"temperature"});
    read(s, "temperature", "sample.", rc.engine.sample.temperature);
  }
  if (j.contains("genetic")) {
    const json& g = j.at("genetic");
    check_keys(g, "genetic.",
               {"crossover_rate", "mutation_rate", "tournament_size",
                "generations_per_iteration", "mutate_depth_min",
                "mutate_depth_max"});
    read(g, "crossover_rate", "genetic.", rc.engine.genetic.crossover_rate);
    read(g, "mutation_rate", "genetic.", rc.engine.genetic.mutation_rate);
    read(g, "tournament_size", "genetic.", rc.engine.genetic.tournament_size);
    read(g, "generations_per_iteration", "genetic.",
         rc.engine.genetic.generations_per_iteration);
    read(g, "mutate_depth_min", "genetic.", rc.engine.genetic.mutate_depth.min);
    read(g, "mutate_depth_max", "genetic.", rc.engine.genetic.mutate_depth.max);
  }
  if (j.contains("init")) {
    const json& i = j.at("init");
    check_keys(i, "init.", {"hot_logit", "edge_logit", "scale_binary_inputs"});
    read(i, "hot_logit", "init.", rc.engine.init.hot_logit);
    read(i, "edge_logit", "init.", rc.engine.init.edge_logit);
    read(i, "scale_binary_inputs", "init.", rc.engine.init.scale_binary_inputs);
  }
  if (j.contains("data")) {
    const json& d = j.at("data");
    check_keys(d, "data.", {"points", "train_fraction"});
    read(d, "points", "data.", rc.data.points);
    read(d, "train_fraction", "data.", rc.data.train_fraction);
  }
  if (j.contains("noise")) {
    const json& n = j.at("noise");
    check_keys(n, "noise.", {"level", "sweep", "noise_test_targets"});
    read(n, "level", "noise.", rc.noise.level);
    read(n, "sweep", "noise.", rc.noise.sweep);
    read(n, "noise_test_targets", "noise.", rc.noise.noise_test_targets);
  }
}

}  // namespace

RunConfig default_run_config() { return RunConfig{}; }

RunConfig synthetic_run_config() {
  RunConfig rc;
  rc.engine.population_size = 1000;
  rc.engine.max_evaluations = 500000;
  return rc;
}

RunConfig load_run_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  DGP_CHECK(in.good(), "cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("config: parse error: ") + e.what());
  }
  DGP_CHECK(j.is_object(), "config: root must be an object");
  apply_json(base, j);
  validate_run_config(base);
  return base;
}

void validate_run_config(const RunConfig& rc) {
  const EngineConfig& e = rc.engine;
  DGP_CHECK(e.population_size >= 1, "engine.population_size must be >= 1");
  DGP_CHECK(e.max_evaluations > 0, "engine.max_evaluations must be positive");
  DGP_CHECK(e.early_stop_nrmse >= 0, "engine.early_stop_nrmse must be >= 0");
  DGP_CHECK(e.max_nodes >= 1, "engine.max_nodes must be >= 1");
  DGP_CHECK(e.max_depth >= 0, "engine.max_depth must be >= 0");
  DGP_CHECK(e.epoch_eval_cost >= 0, "engine.epoch_eval_cost must be >= 0");
  DGP_CHECK(e.samples_per_dst >= 1, "engine.samples_per_dst must be >= 1");
  DGP_CHECK(e.init_depth.min >= 0 && e.init_depth.min <= e.init_depth.max,
            "engine.init_depth range is invalid");
  DGP_CHECK(e.train.epochs >= 0, "train.epochs must be >= 0");
  DGP_CHECK(e.train.batch_size >= 1, "train.batch_size must be >= 1");
  DGP_CHECK(e.train.batches_per_epoch >= 1, "train.batches_per_epoch must be >= 1");
  DGP_CHECK(e.train.lr_node > 0 && e.train.lr_edge > 0,
            "train learning rates must be positive");
  DGP_CHECK(e.train.adam_beta1 >= 0 && e.train.adam_beta1 < 1,
            "train.adam_beta1 must be in [0, 1)");
  DGP_CHECK(e.train.adam_beta2 >= 0 && e.train.adam_beta2 < 1,
            "train.adam_beta2 must be in [0, 1)");
  DGP_CHECK(e.train.adam_eps > 0, "train.adam_eps must be positive");
  DGP_CHECK(e.loss.lambda_01 >= 0, "loss.lambda_01 must be >= 0");
  DGP_CHECK(e.sample.temperature > 0, "sample.temperature must be positive");
  DGP_CHECK(e.genetic.crossover_rate >= 0 && e.genetic.crossover_rate <= 1,
            "genetic.crossover_rate must be in [0, 1]");
  DGP_CHECK(e.genetic.mutation_rate >= 0 && e.genetic.mutation_rate <= 1,
            "genetic.mutation_rate must be in [0, 1]");
  DGP_CHECK(e.genetic.tournament_size >= 1, "genetic.tournament_size must be >= 1");
  DGP_CHECK(e.genetic.generations_per_iteration >= 1,
            "genetic.generations_per_iteration must be >= 1");
  DGP_CHECK(e.genetic.mutate_depth.min >= 0 &&
                e.genetic.mutate_depth.min <= e.genetic.mutate_depth.max,
            "genetic.mutate_depth range is invalid");
  DGP_CHECK(std::isfinite(e.init.hot_logit) && std::isfinite(e.init.edge_logit),
            "init logits must be finite");
  DGP_CHECK(rc.data.points >= 2, "data.points must be >= 2");
  DGP_CHECK(rc.data.train_fraction > 0 && rc.data.train_fraction < 1,
            "data.train_fraction must be in (0, 1)");
  DGP_CHECK(rc.noise.level >= 0, "noise.level must be >= 0");
  DGP_CHECK(!rc.noise.sweep.empty(), "noise.sweep must not be empty");
  for (double g : rc.noise.sweep)
    DGP_CHECK(g >= 0, "noise.sweep entries must be >= 0");
}

std::string run_config_json(const RunConfig& rc) {
  const EngineConfig& e = rc.engine;
  ojson j;
  j["engine"] = {{"population_size", e.population_size},
                 {"max_evaluations", e.max_evaluations},
                 {"early_stop_nrmse", e.early_stop_nrmse},
                 {"max_nodes", e.max_nodes},
                 {"max_depth", e.max_depth},
                 {"epoch_eval_cost", e.epoch_eval_cost},
                 {"samples_per_dst", e.samples_per_dst},
                 {"init_depth_min", e.init_depth.min},
                 {"init_depth_max", e.init_depth.max}};
  j["train"] = {{"epochs", e.train.epochs},
                {"batch_size", e.train.batch_size},
                {"batches_per_epoch", e.train.batches_per_epoch},
                {"lr_node", e.train.lr_node},
                {"lr_edge", e.train.lr_edge},
                {"adam_beta1", e.train.adam_beta1},
                {"adam_beta2", e.train.adam_beta2},
                {"adam_eps", e.train.adam_eps}};
  j["loss"] = {{"lambda_01", e.loss.lambda_01}};
  j["sample"] = {{"temperature", e.sample.temperature}};
  j["genetic"] = {{"crossover_rate", e.genetic.crossover_rate},
                  {"mutation_rate", e.genetic.mutation_rate},
                  {"tournament_size", e.genetic.tournament_size},
                  {"generations_per_iteration", e.genetic.generations_per_iteration},
                  {"mutate_depth_min", e.genetic.mutate_depth.min},
                  {"mutate_depth_max", e.genetic.mutate_depth.max}};
  j["init"] = {{"hot_logit", e.init.hot_logit},
               {"edge_logit", e.init.edge_logit},
               {"scale_binary_inputs", e.init.scale_binary_inputs}};
  j["data"] = {{"points", rc.data.points},
               {"train_fraction", rc.data.train_fraction}};
  j["noise"] = {{"level", rc.noise.level},
                {"sweep", rc.noise.sweep},
                {"noise_test_targets", rc.noise.noise_test_targets}};
  return j.dump(2);
}

}  // namespace dgp
