#pragma once

#include <string>
#include <vector>

#include "dgp/engine.hpp"

namespace dgp {

struct DataConfig {
  std::size_t points = 20;  // per split, synthetic benchmarks
  double train_fraction = 0.75;
};

struct NoiseConfig {
  double level = 0.0;
  std::vector<double> sweep = {0.0,  0.01, 0.02, 0.03, 0.04, 0.05,
                               0.06, 0.07, 0.08, 0.09, 0.1};
  bool noise_test_targets = false;
};

struct RunConfig {
  EngineConfig engine;
  DataConfig data;
  NoiseConfig noise;
};

RunConfig default_run_config();

// Larger population and budget used for the synthetic benchmark protocol.
RunConfig synthetic_run_config();

// Merges a JSON file (comments allowed) over base. Unknown keys and invalid
// values throw ContractViolation with the dotted key path.
RunConfig load_run_config(const std::string& path, RunConfig base);

void validate_run_config(const RunConfig& rc);

// Effective config as pretty JSON text, fixed key order.
std::string run_config_json(const RunConfig& rc);

}  // namespace dgp
