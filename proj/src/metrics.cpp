#include "dgp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace dgp {

double r2(std::span<const double> y, std::span<const double> y_pred) {
  DGP_CHECK(y.size() == y_pred.size(), "r2: size mismatch");
  std::vector<double> ys, ps;
  ys.reserve(y.size());
  ps.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y_pred[i])) continue;
    ys.push_back(y[i]);
    ps.push_back(y_pred[i]);
  }
  DGP_CHECK(ys.size() >= 2, "r2: fewer than 2 finite prediction pairs");

  double mean = 0.0;
  for (double v : ys) mean += v;
  mean /= static_cast<double>(ys.size());

  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const double r = ys[i] - ps[i];
    const double c = ys[i] - mean;
    ss_res += r * r;
    ss_tot += c * c;
  }
  if (ss_tot == 0.0)
    throw DegenerateTargetError("degenerate target: constant y");
  return 1.0 - ss_res / ss_tot;
}

double rmse(std::span<const double> y, std::span<const double> y_pred) {
  DGP_CHECK(y.size() == y_pred.size(), "rmse: size mismatch");
  DGP_CHECK(!y.empty(), "rmse: empty input");
  double ss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double p = std::isfinite(y_pred[i]) ? y_pred[i] : kNonFiniteSentinel;
    const double e = y[i] - p;
    ss += e * e;
  }
  return std::sqrt(ss / static_cast<double>(y.size()));
}

double recovery_rate(const std::vector<bool>& recovered) {
  DGP_CHECK(!recovered.empty(), "recovery_rate: no trials");
  std::size_t hits = 0;
  for (bool b : recovered)
    if (b) ++hits;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(recovered.size());
}

namespace {

MetricAggregate summarize(std::vector<double> v) {
  MetricAggregate a;
  const auto n = static_cast<double>(v.size());
  for (double x : v) a.mean += x;
  a.mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - a.mean) * (x - a.mean);
  a.stddev = std::sqrt(ss / n);
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  a.median = (v.size() % 2 == 1) ? v[m] : 0.5 * (v[m - 1] + v[m]);
  return a;
}

}  // namespace

TrialSummary aggregate(std::vector<TrialRecord> trials) {
  DGP_CHECK(!trials.empty(), "aggregate: no trials");
  std::stable_sort(trials.begin(), trials.end(),
                   [](const TrialRecord& a, const TrialRecord& b) {
                     return a.seed < b.seed;
                   });

  TrialSummary s;
  s.trials = trials.size();

  std::vector<double> r2s, rmses, nrmses, sizes;
  std::vector<bool> rec;
  for (const auto& t : trials) {
    r2s.push_back(t.test_r2);
    rmses.push_back(t.test_rmse);
    nrmses.push_back(t.test_nrmse);
    sizes.push_back(static_cast<double>(t.program_size));
    rec.push_back(t.recovered);
  }
  s.recovery = recovery_rate(rec);
  s.test_r2 = summarize(std::move(r2s));
  s.test_rmse = summarize(std::move(rmses));
  s.test_nrmse = summarize(std::move(nrmses));
  s.program_size = summarize(std::move(sizes));
  s.per_seed = std::move(trials);
  return s;
}

void write_per_seed_csv(std::ostream& os, const TrialSummary& s) {
  os << "seed,train_nrmse,test_r2,test_rmse,test_nrmse,recovered,"
        "program_size,evaluations,expression\n";
  os << std::setprecision(17);
  for (const auto& t : s.per_seed) {
    os << t.seed << ',' << t.train_nrmse << ',' << t.test_r2 << ','
       << t.test_rmse << ',' << t.test_nrmse << ',' << (t.recovered ? 1 : 0)
       << ',' << t.program_size << ',' << t.evaluations_used << ','
       << t.expression << '\n';
  }
}

void write_aggregate_csv(std::ostream& os, const std::vector<AggregateRow>& rows) {
  os << "benchmark,method,noise,trials,recovery_rate,"
        "r2_mean,r2_std,r2_median,"
        "rmse_mean,rmse_std,rmse_median,"
        "nrmse_mean,nrmse_std,nrmse_median,"
        "size_mean,size_std,size_median\n";
  os << std::setprecision(17);
  for (const auto& r : rows) {
    const TrialSummary& s = r.summary;
    os << r.benchmark << ',' << r.method << ',' << r.noise << ',' << s.trials
       << ',' << s.recovery << ',' << s.test_r2.mean << ',' << s.test_r2.stddev
       << ',' << s.test_r2.median << ',' << s.test_rmse.mean << ','
       << s.test_rmse.stddev << ',' << s.test_rmse.median << ','
       << s.test_nrmse.mean << ',' << s.test_nrmse.stddev << ','
       << s.test_nrmse.median << ',' << s.program_size.mean << ','
       << s.program_size.stddev << ',' << s.program_size.median << '\n';
  }
}

}  // namespace dgp
