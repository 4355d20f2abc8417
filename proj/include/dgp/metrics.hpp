#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dgp/grad.hpp"

namespace dgp {

// Coefficient of determination. Pairs with a non-finite prediction are
// dropped first; at least two pairs must survive and the surviving targets
// must not be constant.
double r2(std::span<const double> y, std::span<const double> y_pred);

// Root mean squared error with non-finite predictions replaced by the same
// sentinel the training loss uses.
double rmse(std::span<const double> y, std::span<const double> y_pred);

// Percentage of trials whose flag is set.
double recovery_rate(const std::vector<bool>& recovered);

struct TrialRecord {
  std::uint64_t seed = 0;
  double train_nrmse = 0.0;
  double test_r2 = 0.0;
  double test_rmse = 0.0;
  double test_nrmse = 0.0;
  bool recovered = false;
  std::size_t program_size = 0;
  double evaluations_used = 0.0;
  double wall_time_sec = 0.0;
  std::string expression;
};

struct MetricAggregate {
  double mean = 0.0;
  double stddev = 0.0;  // population, divisor n
  double median = 0.0;
};

struct TrialSummary {
  std::size_t trials = 0;
  double recovery = 0.0;  // percent
  MetricAggregate test_r2;
  MetricAggregate test_rmse;
  MetricAggregate test_nrmse;
  MetricAggregate program_size;
  std::vector<TrialRecord> per_seed;  // sorted by seed
};

TrialSummary aggregate(std::vector<TrialRecord> trials);

struct AggregateRow {
  std::string benchmark;
  std::string method;
  double noise = 0.0;
  TrialSummary summary;
};

void write_per_seed_csv(std::ostream& os, const TrialSummary& s);
void write_aggregate_csv(std::ostream& os, const std::vector<AggregateRow>& rows);

}  // namespace dgp
