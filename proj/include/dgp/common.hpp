#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace dgp {

class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

#define DGP_CHECK(cond, msg)                          \
  do {                                                \
    if (!(cond)) throw ::dgp::ContractViolation(msg); \
  } while (0)

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic RNG with portable distributions. std:: distribution objects
/// are implementation-defined, so the few draws we need are made explicit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  /// Uniform in [0,1), 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform index in [0,n). n must be > 0.
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  /// Uniform integer in [lo,hi] inclusive.
  int range(int lo, int hi) {
    return lo + static_cast<int>(index(static_cast<std::size_t>(hi - lo) + 1));
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller (two fresh draws per call, no cached spare).
  double normal() {
    double u1 = 1.0 - uniform();  // (0,1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  /// Derives an independent stream seed from a base seed and up to three tags.
  static std::uint64_t derive(std::uint64_t base, std::uint64_t a,
                              std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t h = splitmix64(base);
    h = splitmix64(h ^ splitmix64(a ^ 0x1a2b3c4d5e6f7788ULL));
    h = splitmix64(h ^ splitmix64(b ^ 0x9e3779b97f4a7c15ULL));
    h = splitmix64(h ^ splitmix64(c ^ 0x2545f4914f6cdd1dULL));
    return h;
  }

 private:
  std::mt19937_64 eng_;
};

/// Column-major sample matrix: rows = samples, cols = variables.
struct ColMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  ColMatrix() = default;
  ColMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double* col(std::size_t j) { return a.data() + j * rows; }
  const double* col(std::size_t j) const { return a.data() + j * rows; }
  std::span<const double> col_span(std::size_t j) const { return {col(j), rows}; }
  double& at(std::size_t i, std::size_t j) { return a[j * rows + i]; }
  double at(std::size_t i, std::size_t j) const { return a[j * rows + i]; }
};

/// Runs fn(i) for i in [0,n). Work items must be independent; results must
/// not depend on execution order. threads <= 0 means use all hardware threads.
inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  unsigned hw = std::thread::hardware_concurrency();
  std::size_t t = threads <= 0 ? (hw ? hw : 1) : static_cast<std::size_t>(threads);
  t = std::min<std::size_t>(t, n);
  if (t <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> head{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i = head.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(t);
  for (std::size_t k = 0; k < t; ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace dgp
