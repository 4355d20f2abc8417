#include "dgp/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

namespace dgp {

ColMatrix Dataset::gather_x(const std::vector<std::size_t>& idx) const {
  ColMatrix out(idx.size(), X.cols);
  for (std::size_t j = 0; j < X.cols; ++j) {
    const double* src = X.col(j);
    double* dst = out.col(j);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      DGP_CHECK(idx[k] < X.rows, "gather index out of range");
      dst[k] = src[idx[k]];
    }
  }
  return out;
}

std::vector<double> Dataset::gather_y(const std::vector<std::size_t>& idx) const {
  std::vector<double> out(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    DGP_CHECK(idx[k] < y.size(), "gather index out of range");
    out[k] = y[idx[k]];
  }
  return out;
}

std::optional<Benchmark> parse_benchmark(std::string_view name) {
  if (name.size() != 2) return std::nullopt;
  char s = name[0];
  if (s != 'S' && s != 's') return std::nullopt;
  char c = name[1];
  if (c < '1' || c > '6') return std::nullopt;
  return static_cast<Benchmark>(c - '1');
}

std::string benchmark_name(Benchmark b) {
  return std::string("S") + static_cast<char>('1' + static_cast<int>(b));
}

namespace {

SymbolicTree leaf_x(int j) { return SymbolicTree::leaf(var(j)); }

// cos(x - x) = 1 everywhere, the constant-free stand-in for literal 1.
SymbolicTree one_tree(int j) {
  return SymbolicTree::unary(
      prim(PrimKind::Cos),
      SymbolicTree::binary(prim(PrimKind::Sub), leaf_x(j), leaf_x(j)));
}

SymbolicTree bin(PrimKind k, SymbolicTree a, SymbolicTree b) {
  return SymbolicTree::binary(prim(k), std::move(a), std::move(b));
}

SymbolicTree una(PrimKind k, SymbolicTree a) {
  return SymbolicTree::unary(prim(k), std::move(a));
}

}  // namespace

SymbolicTree benchmark_tree(Benchmark b) {
  using K = PrimKind;
  switch (b) {
    case Benchmark::S1:
      // sin(x^2) cos(x) - 1
      return bin(K::Sub,
                 bin(K::Mul, una(K::Sin, bin(K::Mul, leaf_x(0), leaf_x(0))),
                     una(K::Cos, leaf_x(0))),
                 one_tree(0));
    case Benchmark::S2:
      // log(x + 1) + log(x^2 + 1)
      return bin(K::Add, una(K::Log, bin(K::Add, leaf_x(0), one_tree(0))),
                 una(K::Log,
                     bin(K::Add, bin(K::Mul, leaf_x(0), leaf_x(0)), one_tree(0))));
    case Benchmark::S3:
      // x^3 + x^2 + x + sin(x) + sin(x^2)
      return bin(
          K::Add,
          bin(K::Add,
              bin(K::Add,
                  bin(K::Add,
                      bin(K::Mul, bin(K::Mul, leaf_x(0), leaf_x(0)), leaf_x(0)),
                      bin(K::Mul, leaf_x(0), leaf_x(0))),
                  leaf_x(0)),
              una(K::Sin, leaf_x(0))),
          una(K::Sin, bin(K::Mul, leaf_x(0), leaf_x(0))));
    case Benchmark::S4:
      // sin(x) + sin(y^2)
      return bin(K::Add, una(K::Sin, leaf_x(0)),
                 una(K::Sin, bin(K::Mul, leaf_x(1), leaf_x(1))));
    case Benchmark::S5:
      // x^4 / (x + y)
      return bin(K::Div,
                 bin(K::Mul, bin(K::Mul, leaf_x(0), leaf_x(0)),
                     bin(K::Mul, leaf_x(0), leaf_x(0))),
                 bin(K::Add, leaf_x(0), leaf_x(1)));
    case Benchmark::S6:
      // 4 sin(x) cos(y), with 4 = (1+1)*(1+1)
      return bin(K::Mul,
                 bin(K::Mul, bin(K::Add, one_tree(0), one_tree(0)),
                     bin(K::Add, one_tree(0), one_tree(0))),
                 bin(K::Mul, una(K::Sin, leaf_x(0)), una(K::Cos, leaf_x(1))));
  }
  DGP_CHECK(false, "unknown benchmark");
  return leaf_x(0);
}

Domain benchmark_domain(Benchmark b) {
  std::pair<double, double> r;
  switch (b) {
    case Benchmark::S1:
    case Benchmark::S3:
    case Benchmark::S5: r = {-1.0, 1.0}; break;
    case Benchmark::S2: r = {0.0, 2.0}; break;
    case Benchmark::S4:
    case Benchmark::S6: r = {0.0, 1.0}; break;
  }
  Domain dom;
  dom.ranges.assign(benchmark_dims(b), r);
  return dom;
}

std::size_t benchmark_dims(Benchmark b) {
  switch (b) {
    case Benchmark::S4:
    case Benchmark::S5:
    case Benchmark::S6: return 2;
    default: return 1;
  }
}

namespace {

bool parse_cell(const std::string& cell, double& out) {
  const char* s = cell.c_str();
  char* end = nullptr;
  out = std::strtod(s, &end);
  if (end == s) return false;
  while (*end != '\0') {
    if (!std::isspace(static_cast<unsigned char>(*end))) return false;
    ++end;
  }
  return std::isfinite(out);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

std::string trimmed(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& target_column) {
  std::ifstream in(path);
  DGP_CHECK(in.good(), "cannot open data file: " + path);

  std::string line;
  DGP_CHECK(static_cast<bool>(std::getline(in, line)), "empty data file: " + path);
  std::vector<std::string> header = split_line(line);
  for (auto& h : header) h = trimmed(h);
  DGP_CHECK(header.size() >= 2, "need at least one feature column and a target");

  std::size_t target_col = header.size() - 1;
  if (!target_column.empty()) {
    auto it = std::find(header.begin(), header.end(), target_column);
    DGP_CHECK(it != header.end(), "target column not found: " + target_column);
    target_col = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trimmed(line).empty()) continue;
    std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      throw ContractViolation("row " + std::to_string(lineno) + " has " +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(header.size()));
    }
    std::vector<double> vals(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (!parse_cell(cells[j], vals[j])) {
        throw ContractViolation("row " + std::to_string(lineno) +
                                ", column '" + header[j] +
                                "': non-numeric cell '" + trimmed(cells[j]) + "'");
      }
    }
    rows.push_back(std::move(vals));
  }
  DGP_CHECK(rows.size() >= 4, "need at least 4 data rows, got " +
                                  std::to_string(rows.size()));

  Dataset ds;
  ds.target_name = header[target_col];
  for (std::size_t j = 0; j < header.size(); ++j)
    if (j != target_col) ds.variable_names.push_back(header[j]);

  ds.X = ColMatrix(rows.size(), header.size() - 1);
  ds.y.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::size_t jj = 0;
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j == target_col) {
        ds.y[i] = rows[i][j];
      } else {
        ds.X.at(i, jj) = rows[i][j];
        ++jj;
      }
    }
  }

  bool constant = true;
  for (std::size_t i = 1; i < ds.y.size(); ++i)
    if (ds.y[i] != ds.y[0]) { constant = false; break; }
  if (constant) {
    std::fprintf(stderr, "warning: target column '%s' is constant; training will fail\n",
                 ds.target_name.c_str());
  }
  return ds;
}

void split(Dataset& ds, double train_fraction, Rng& rng) {
  const std::size_t n = ds.n();
  DGP_CHECK(n >= 4, "need at least 4 samples to split");
  DGP_CHECK(train_fraction > 0.0 && train_fraction < 1.0,
            "train_fraction must be in (0, 1)");

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t t = 0; t + 1 < n; ++t) {
    std::size_t j = t + rng.index(n - t);
    std::swap(perm[t], perm[j]);
  }

  auto ntrain = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  ntrain = std::clamp<std::size_t>(ntrain, 1, n - 1);

  ds.train_idx.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(ntrain));
  ds.test_idx.assign(perm.begin() + static_cast<std::ptrdiff_t>(ntrain), perm.end());
  std::sort(ds.train_idx.begin(), ds.train_idx.end());
  std::sort(ds.test_idx.begin(), ds.test_idx.end());
}

Dataset generate_synthetic(const SyntheticSpec& spec, Rng& rng) {
  DGP_CHECK(spec.points >= 2, "need at least 2 points per split");
  const std::size_t d = benchmark_dims(spec.bench);
  const std::size_t n = 2 * spec.points;
  const Domain dom = benchmark_domain(spec.bench);
  const SymbolicTree gt = benchmark_tree(spec.bench);

  Dataset ds;
  ds.X = ColMatrix(n, d);
  ds.y.resize(n);
  ds.variable_names = d == 1 ? std::vector<std::string>{"x"}
                             : std::vector<std::string>{"x", "y"};

  std::vector<double> pt(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (;;) {
      for (std::size_t j = 0; j < d; ++j) {
        auto [lo, hi] = dom.ranges[j];
        double v = rng.uniform(lo, hi);
        while (v == lo) v = rng.uniform(lo, hi);  // keep the range open
        pt[j] = v;
      }
      // S5 has a pole along x + y = 0; resample so the truth stays
      // protection-free inside the data.
      if (spec.bench == Benchmark::S5 && std::fabs(pt[0] + pt[1]) < 1e-3) continue;
      break;
    }
    for (std::size_t j = 0; j < d; ++j) ds.X.at(i, j) = pt[j];
    ds.y[i] = evaluate_tree(gt, pt);
  }

  ds.train_idx.resize(spec.points);
  ds.test_idx.resize(spec.points);
  std::iota(ds.train_idx.begin(), ds.train_idx.end(), std::size_t{0});
  std::iota(ds.test_idx.begin(), ds.test_idx.end(), spec.points);

  ds.ground_truth = gt;
  ds.domain = dom;
  return ds;
}

void add_noise(Dataset& ds, const NoiseSpec& spec, Rng& rng) {
  DGP_CHECK(spec.level >= 0.0, "noise level must be nonnegative");
  if (spec.level == 0.0) return;
  DGP_CHECK(ds.has_split(), "split must be set before adding noise");

  double ss = 0.0;
  for (std::size_t i : ds.train_idx) ss += ds.y[i] * ds.y[i];
  const double rms = std::sqrt(ss / static_cast<double>(ds.train_idx.size()));
  const double sd = spec.level * rms;

  for (std::size_t i : ds.train_idx) ds.y[i] += sd * rng.normal();
  if (spec.noise_test_targets)
    for (std::size_t i : ds.test_idx) ds.y[i] += sd * rng.normal();
}

void write_csv(const Dataset& ds, std::ostream& os) {
  for (const auto& v : ds.variable_names) os << v << ',';
  os << ds.target_name << '\n';
  os << std::setprecision(17);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    for (std::size_t j = 0; j < ds.d(); ++j) os << ds.X.at(i, j) << ',';
    os << ds.y[i] << '\n';
  }
}

}  // namespace dgp
