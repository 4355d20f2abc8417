// Acceptance gate: every release-blocking property and scaled benchmark check
// in one binary. Prints one line per criterion and exits nonzero when any
// fails. Tolerances and budgets are pinned here on purpose; do not loosen
// them to make a run green.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dgp/config.hpp"
#include "dgp/engine.hpp"
#include "dgp/metrics.hpp"

#ifndef DGP_CLI_PATH
#error "DGP_CLI_PATH must point at the dgp binary"
#endif

using namespace dgp;
namespace fs = std::filesystem;
using njson = nlohmann::json;

namespace {

int g_failed = 0;

void report(int idx, const char* name, bool pass, const std::string& detail) {
  std::printf("criterion %2d %-28s %s  (%s)\n", idx, name,
              pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failed;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// ---------------------------------------------------------------- criterion 1

void criterion_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  constexpr double kH = 1e-5;
  constexpr double kRelTol = 1e-4;
  constexpr double kAbsTol = 1e-6;
  const LossConfig lc;

  Rng rng(901);
  int accepted = 0, attempts = 0;
  int bad_params = 0;
  double worst_rel = 0.0;

  while (accepted < 100 && attempts < 2000) {
    ++attempts;
    const int d = 1 + static_cast<int>(rng.index(3));
    const std::size_t batch = 2 + rng.index(7);
    PrimitiveSet ps = PrimitiveSet::canonical(d);

    SymbolicTree t = random_tree(
        rng, {1, 3}, rng.bernoulli(0.5) ? GrowMethod::Grow : GrowMethod::Full, ps);
    if (t.size() > 9) continue;

    DiffSymbolicTree dst = relax(t, ps, InitConfig{});
    for (double& v : dst.nodes().flat()) v += rng.uniform(-1.0, 1.0);
    for (double& v : dst.adjacency().flat()) v += rng.uniform(-1.0, 1.0);

    ColMatrix X(batch, static_cast<std::size_t>(d));
    for (double& v : X.a) v = rng.uniform(-2.0, 2.0);
    std::vector<double> y(batch);
    for (double& v : y) v = rng.uniform(-2.0, 2.0);
    y[0] += 1.0;

    // skip plateau and blow-up cases: central differences of a 1e12-scale
    // sentinel loss are pure cancellation noise
    const double base = total_loss(dst, X, y, lc).total;
    if (!(std::fabs(base) < 1e3)) continue;

    ForwardTrace trace;
    forward_loss(dst, X, y, lc, trace);
    Gradients an;
    backward(dst, trace, X, y, lc, an);

    auto check_param = [&](double& p, double analytic) {
      const double keep = p;
      p = keep + kH;
      const double lp = total_loss(dst, X, y, lc).total;
      p = keep - kH;
      const double lm = total_loss(dst, X, y, lc).total;
      p = keep;
      const double fd = (lp - lm) / (2.0 * kH);
      const double err = std::fabs(fd - analytic);
      const double scale = std::max(std::fabs(fd), std::fabs(analytic));
      const double rel = scale > 0.0 ? err / scale : 0.0;
      if (err > kAbsTol && rel > kRelTol) {
        ++bad_params;
        worst_rel = std::max(worst_rel, rel);
      }
    };

    auto nflat = dst.nodes().flat();
    for (std::size_t p = 0; p < nflat.size(); ++p)
      check_param(nflat[p], an.node[p]);
    auto eflat = dst.adjacency().flat();
    for (std::size_t p = 0; p < eflat.size(); ++p)
      check_param(eflat[p], an.edge[p]);

    ++accepted;
  }

  const double dt = seconds_since(t0);
  const bool pass = accepted == 100 && bad_params == 0 && dt < 30.0;
  report(1, "gradient correctness", pass,
         fmt("%d/100 trees, %d bad params, worst rel %.2g, %.1fs (budget 30s)",
             accepted, bad_params, worst_rel, dt));
}

// ---------------------------------------------------------------- criterion 2

void criterion_relaxation() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(902);
  const InitConfig hard{40.0, 40.0, true};

  int checked = 0, skipped = 0, bad = 0;
  double worst = 0.0;
  for (int i = 0; i < 200 && checked < 240; ++i) {
    const int d = (i % 2) + 1;
    PrimitiveSet ps = PrimitiveSet::canonical(d);
    SymbolicTree t = random_tree(
        rng, {1, 3}, i % 4 < 2 ? GrowMethod::Grow : GrowMethod::Full, ps);
    DiffSymbolicTree dst = relax(t, ps, hard);

    for (int s = 0; s < 4; ++s) {
      std::vector<double> x(static_cast<std::size_t>(d));
      for (double& v : x) v = rng.uniform(-2.0, 2.0);
      bool fired = false;
      const double truth = evaluate_tree(t, x, &fired);
      if (fired) {  // protection floors amplify residual mixture mass
        ++skipped;  // unboundedly; indeterminate, as in numeric_equiv
        continue;
      }
      // residual softmax mass is ~e^-40 per column, and a subtree value v
      // reaching a phantom exp column contributes ~e^(min(v,50)-40) to the
      // mix, so the comparison only converges where intermediates stay
      // below 40-ln(1/tol) ~ 33; pairs beyond that horizon are skipped
      double vmax = 0.0;
      for (int k = 0; k < t.size(); ++k) {
        bool sub_fired = false;
        const double v = evaluate_tree(t.subtree(k), x, &sub_fired);
        vmax = std::max(vmax, std::fabs(v));
      }
      if (vmax > 30.0) {
        ++skipped;
        continue;
      }
      const double relaxed = forward_one(dst, x);
      const double tol = 1e-3 * (1.0 + std::fabs(truth));
      const double diff = std::fabs(relaxed - truth);
      if (!(diff <= tol)) ++bad;
      worst = std::max(worst, diff / tol);
      ++checked;
    }
  }

  const double dt = seconds_since(t0);
  const bool pass = checked >= 200 && bad == 0 && dt < 10.0;
  report(2, "relaxation consistency", pass,
         fmt("%d pairs (%d indeterminate skips), %d out of tol, "
             "worst %.2g of budget, %.2fs (10s)",
             checked, skipped, bad, worst, dt));
}

// ---------------------------------------------------------------- criterion 3

void criterion_identity() {
  Rng rng(903);
  PrimitiveSet ps = PrimitiveSet::canonical(2);
  SampleConfig sc;
  sc.temperature = 1e-3;

  int ok = 0;
  for (int i = 0; i < 100; ++i) {
    SymbolicTree t = random_tree(
        rng, {1, 3}, rng.bernoulli(0.5) ? GrowMethod::Grow : GrowMethod::Full, ps);
    DiffSymbolicTree dst = relax(t, ps, InitConfig{});
    SymbolicTree s = sample_tree(dst, rng, sc);
    if (to_prefix(s) == to_prefix(t)) ++ok;
  }
  report(3, "discretization identity", ok == 100, fmt("%d/100 exact", ok));
}

// ---------------------------------------------------------------- criterion 4

void criterion_soundness() {
  Rng rng(904);
  PrimitiveSet ps = PrimitiveSet::canonical(2);
  GeneticConfig gc;
  gc.max_nodes = 25;
  gc.max_depth = 6;

  const PrimKind binaries[] = {PrimKind::Add, PrimKind::Sub, PrimKind::Mul,
                               PrimKind::Div};
  const PrimKind unaries[] = {PrimKind::Sin, PrimKind::Cos, PrimKind::Exp,
                              PrimKind::Log, PrimKind::Pass};

  int violations = 0;
  std::string first_why;
  for (int seq = 0; seq < 10000; ++seq) {
    SymbolicTree t = random_tree(
        rng, {1, 3}, rng.bernoulli(0.5) ? GrowMethod::Grow : GrowMethod::Full, ps);

    for (int step = 0; step < 8; ++step) {
      switch (rng.index(5)) {
        case 0: {  // shrink a function node
          std::vector<int> fns;
          for (int i = 0; i < t.size(); ++i)
            if (t.nodes()[static_cast<std::size_t>(i)].prim.arity() > 0)
              fns.push_back(i);
          if (fns.empty()) break;
          std::vector<double> strengths(static_cast<std::size_t>(t.size()));
          for (double& s : strengths) s = rng.uniform();
          t = shrink(t, fns[rng.index(fns.size())], strengths);
          break;
        }
        case 1: {  // replace with an arity-matched primitive
          const int i = static_cast<int>(rng.index(static_cast<std::size_t>(t.size())));
          const int a = t.nodes()[static_cast<std::size_t>(i)].prim.arity();
          Primitive p = a == 2 ? prim(binaries[rng.index(4)])
                      : a == 1 ? prim(unaries[rng.index(5)])
                               : var(static_cast<std::int32_t>(rng.index(2)));
          t = replace(t, i, p);
          break;
        }
        case 2: {  // expand a leaf or unary node
          std::vector<int> low;
          for (int i = 0; i < t.size(); ++i)
            if (t.nodes()[static_cast<std::size_t>(i)].prim.arity() < 2)
              low.push_back(i);
          if (low.empty()) break;
          const int i = low[rng.index(low.size())];
          const int a = t.nodes()[static_cast<std::size_t>(i)].prim.arity();
          Primitive p = (a == 0 && rng.bernoulli(0.5)) ? prim(unaries[rng.index(5)])
                                                       : prim(binaries[rng.index(4)]);
          if (auto r = expand(t, i, p, rng, ps, gc.max_nodes, gc.max_depth))
            t = *r;
          break;
        }
        case 3: {  // crossover against a fresh partner
          SymbolicTree partner = random_tree(rng, {1, 3}, GrowMethod::Grow, ps);
          t = crossover_one_point(t, partner, rng, gc).first;
          break;
        }
        default:
          t = mutate_uniform(t, rng, gc, ps);
      }

      std::string why;
      if (!t.structurally_valid(&why) || t.size() > gc.max_nodes ||
          t.depth() > gc.max_depth) {
        ++violations;
        if (first_why.empty())
          first_why = why.empty() ? "cap violation" : why;
      }
    }
  }

  report(4, "structural soundness", violations == 0,
         fmt("10000 sequences x 8 ops, %d violations%s%s", violations,
             first_why.empty() ? "" : ": ", first_why.c_str()));
}

// ---------------------------------------------------------------- criterion 5

void criterion_oracles() {
  std::vector<double> onehot(9, 0.0);
  onehot[3] = 1.0;
  const double l01 = loss_01_row(onehot);

  std::vector<double> y = {0.0, 2.0}, pred = {1.0, 1.0};
  const double nr = nrmse(y, pred);

  std::vector<double> y2 = {1.0, 2.0, 3.0}, p2 = {1.0, 2.0, 4.0};
  const double r = r2(y2, p2);

  const bool pass = std::fabs(l01 - (-0.25)) <= 1e-12 &&
                    std::fabs(nr - 1.0) <= 1e-12 && std::fabs(r - 0.5) <= 1e-12;
  report(5, "loss unit oracles", pass,
         fmt("loss01 %.17g, nrmse %.17g, r2 %.17g", l01, nr, r));
}

// ------------------------------------------------------- criteria 6, 7, 8, 9

RunConfig desk_config() {
  RunConfig rc = synthetic_run_config();
  rc.engine.population_size = 50;
  rc.engine.max_evaluations = 50000;
  rc.engine.train.epochs = 200;
  return rc;
}

struct Arm {
  std::vector<RunResult> results;
  std::vector<bool> recovered;
  double mean_test_rmse = 0.0;
  int recovered_count = 0;
};

// Mirrors the synth command end to end: same seed derivation, data
// generation, noise injection, and equivalence check.
Arm run_arm(Benchmark bench, double gamma, bool gp, std::uint64_t base_seed) {
  constexpr std::uint64_t kTagSynthData = 102;
  constexpr std::uint64_t kTagNoise = 103;
  constexpr std::uint64_t kTagEquiv = 104;

  RunConfig rc = desk_config();
  Arm arm;
  double rmse_sum = 0.0;
  for (std::size_t i = 0; i < 10; ++i) {
    const std::uint64_t tseed = base_seed + i;
    Rng gen_rng(Rng::derive(tseed, 0, 0, kTagSynthData));
    Dataset ds = generate_synthetic({bench, rc.data.points}, gen_rng);
    if (gamma > 0.0) {
      Rng noise_rng(Rng::derive(tseed, 0, 0, kTagNoise));
      add_noise(ds, {gamma, rc.noise.noise_test_targets}, noise_rng);
    }

    EngineConfig ec = rc.engine;
    ec.seed = tseed;
    ec.threads = 1;
    RunResult res = gp ? canonical_gp_run(ds, ec) : dgp_run(ds, ec);

    Rng eq_rng(Rng::derive(tseed, 0, 0, kTagEquiv));
    const bool rec = numeric_equiv(simplify(res.best_tree), *ds.ground_truth,
                                   *ds.domain, eq_rng);
    if (rec) ++arm.recovered_count;
    rmse_sum += res.test_rmse;
    arm.results.push_back(std::move(res));
    arm.recovered.push_back(rec);
  }
  arm.mean_test_rmse = rmse_sum / 10.0;
  return arm;
}

Arm criterion_s4_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  Arm s4 = run_arm(Benchmark::S4, 0.0, false, 1);
  const double dt = seconds_since(t0);

  const bool pass = s4.recovered_count >= 6 && dt < 600.0;
  report(6, "s4 recovery at desk scale", pass,
         fmt("%d/10 recovered (need 6), %.0fs (budget 600s)",
             s4.recovered_count, dt));
  return s4;
}

void criterion_program_size(const Arm& s4) {
  int max_size = 0;
  for (std::size_t i = 0; i < s4.results.size(); ++i)
    if (s4.recovered[i])
      max_size = std::max(max_size, simplify(s4.results[i].best_tree).size());
  report(9, "program size sanity", max_size <= 15,
         s4.recovered_count == 0
             ? std::string("no recovered solutions to measure")
             : fmt("max simplified size %d over %d recovered (cap 15)",
                   max_size, s4.recovered_count));
}

void criterion_head_to_head_and_noise() {
  const auto t0 = std::chrono::steady_clock::now();
  Arm dgp_clean = run_arm(Benchmark::S1, 0.0, false, 1);
  Arm gp_clean = run_arm(Benchmark::S1, 0.0, true, 1);

  const bool pass7 = dgp_clean.recovered_count >= gp_clean.recovered_count;
  report(7, "dgp vs gp head to head", pass7,
         fmt("s1 recovery dgp %d/10 vs gp %d/10, %.0fs",
             dgp_clean.recovered_count, gp_clean.recovered_count,
             seconds_since(t0)));

  Arm dgp_noisy = run_arm(Benchmark::S1, 0.1, false, 1);
  const bool pass8 = dgp_noisy.mean_test_rmse >= dgp_clean.mean_test_rmse;
  report(8, "noise monotonic degradation", pass8,
         fmt("mean test rmse %.4g at gamma 0.1 vs %.4g clean (10 paired seeds)",
             dgp_noisy.mean_test_rmse, dgp_clean.mean_test_rmse));
}

// --------------------------------------------------------------- criterion 10

struct CliResult {
  int exit_code = -1;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + DGP_CLI_PATH + "\" " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, "popen failed"};
  std::string out;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

njson artifact_sans_time(const fs::path& p) {
  njson j = njson::parse(slurp(p));
  j["result"].erase("wall_time_sec");
  return j;
}

void criterion_determinism() {
  fs::path dir = fs::temp_directory_path() / "dgp_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);

  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << "{\"engine\": {\"population_size\": 8, \"max_evaluations\": 200},\n"
           " \"train\": {\"epochs\": 3},\n"
           " \"genetic\": {\"generations_per_iteration\": 4}}\n";
    std::ofstream csv(dir / "d.csv");
    csv << "a,b,y\n";
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        csv << 0.25 * i - 0.5 << ',' << 0.5 * j - 0.75 << ','
            << (0.25 * i - 0.5) * (0.5 * j - 0.75) << '\n';
  }
  const std::string cfg_arg = " --config " + (dir / "cfg.json").string();

  bool pass = true;
  std::string detail = "synth + fit + eval identical modulo wall_time_sec";

  const std::string synth_args = "--quiet synth --bench S4 --trials 2 "
                                 "--method gp --seed 5" + cfg_arg + " --out ";
  if (run_cli(synth_args + (dir / "a").string()).exit_code != 0 ||
      run_cli(synth_args + (dir / "b").string()).exit_code != 0) {
    pass = false;
    detail = "synth invocation failed";
  } else {
    for (const char* name : {"trial_seed5.json", "trial_seed6.json"}) {
      if (artifact_sans_time(dir / "a" / "noise_0" / name) !=
          artifact_sans_time(dir / "b" / "noise_0" / name)) {
        pass = false;
        detail = std::string("synth artifacts differ: ") + name;
      }
    }
    if (slurp(dir / "a" / "noise_0" / "per_seed.csv") !=
            slurp(dir / "b" / "noise_0" / "per_seed.csv") ||
        slurp(dir / "a" / "aggregate.csv") != slurp(dir / "b" / "aggregate.csv")) {
      pass = false;
      detail = "synth csv outputs differ";
    }
  }

  const std::string fit_args = "--quiet fit --data " + (dir / "d.csv").string() +
                               " --seed 9" + cfg_arg + " --out ";
  if (run_cli(fit_args + (dir / "f1.json").string()).exit_code != 0 ||
      run_cli(fit_args + (dir / "f2.json").string()).exit_code != 0 ||
      artifact_sans_time(dir / "f1.json") != artifact_sans_time(dir / "f2.json")) {
    pass = false;
    detail = "fit artifacts differ";
  }

  const std::string eval_args = "eval --expr \"(* x0 x1)\" --data " +
                                (dir / "d.csv").string();
  CliResult e1 = run_cli(eval_args);
  CliResult e2 = run_cli(eval_args);
  if (e1.exit_code != 0 || e1.output != e2.output) {
    pass = false;
    detail = "eval output differs between runs";
  }

  report(10, "cli determinism", pass, detail);
}

}  // namespace

int main() {
  std::printf("acceptance gate, pinned tolerances, single process\n");
  criterion_gradients();
  criterion_relaxation();
  criterion_identity();
  criterion_soundness();
  criterion_oracles();
  Arm s4 = criterion_s4_recovery();
  criterion_head_to_head_and_noise();
  criterion_program_size(s4);
  criterion_determinism();
  std::printf("acceptance: %d/10 criteria passed\n", 10 - g_failed);
  return g_failed == 0 ? 0 : 1;
}
