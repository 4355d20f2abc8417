#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dgp/common.hpp"
#include "dgp/expr.hpp"

namespace dgp {

// Rows are samples, columns are variables. X is column-major so per-variable
// slices are contiguous for the evaluators.
struct Dataset {
  ColMatrix X;
  std::vector<double> y;
  std::vector<std::string> variable_names;
  std::string target_name = "y";

  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;

  std::optional<SymbolicTree> ground_truth;
  std::optional<Domain> domain;

  std::size_t n() const { return X.rows; }
  std::size_t d() const { return X.cols; }
  bool has_split() const { return !train_idx.empty(); }

  ColMatrix gather_x(const std::vector<std::size_t>& idx) const;
  std::vector<double> gather_y(const std::vector<std::size_t>& idx) const;
};

enum class Benchmark { S1, S2, S3, S4, S5, S6 };

std::optional<Benchmark> parse_benchmark(std::string_view name);
std::string benchmark_name(Benchmark b);

// Ground truth as a constant-free tree over the canonical primitive set.
SymbolicTree benchmark_tree(Benchmark b);
Domain benchmark_domain(Benchmark b);
std::size_t benchmark_dims(Benchmark b);

struct SyntheticSpec {
  Benchmark bench = Benchmark::S1;
  std::size_t points = 20;  // per split
};

struct NoiseSpec {
  double level = 0.0;  // gamma, std as a fraction of RMS(y_train)
  bool noise_test_targets = false;
};

// target_column empty means "last column". Throws ContractViolation with a
// row/column diagnostic on malformed input.
Dataset load_csv(const std::string& path, const std::string& target_column = "");

// Shuffled partition, train size = round(train_fraction * n). Indices come
// back sorted so downstream gathers are in row order.
void split(Dataset& ds, double train_fraction, Rng& rng);

// 2*points samples uniform in the benchmark domain, first half train. The
// ground-truth tree and domain are attached for recovery checking.
Dataset generate_synthetic(const SyntheticSpec& spec, Rng& rng);

// Adds N(0, (level*RMS(y_train))^2) to training targets in place. Test
// targets stay clean unless noise_test_targets is set.
void add_noise(Dataset& ds, const NoiseSpec& spec, Rng& rng);

void write_csv(const Dataset& ds, std::ostream& os);

}  // namespace dgp
