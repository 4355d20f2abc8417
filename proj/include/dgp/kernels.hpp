#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>

// Batched numeric kernels that carry the hot inner loops: elementwise tree
// arithmetic over sample batches, reductions for losses and gradients, and
// the Adam parameter update. A scalar reference backend defines the exact
// semantics; vector backends (AVX2 on x86-64, NEON on aarch64) must agree
// bit for bit on elementwise ops and to tight tolerance on reductions, where
// accumulation order differs. Transcendentals stay on scalar libm in every
// backend so results cannot drift between machines with different vector
// math libraries.

namespace dgp::kern {

inline constexpr double kDivEps = 1e-6;
inline constexpr double kLogEps = 1e-6;
inline constexpr double kExpClamp = 50.0;

// Protected scalar forms. These are the single source of truth for operator
// semantics; vector backends replicate them lane by lane.
inline double protected_div(double a, double b) {
  double d = std::fabs(b) >= kDivEps ? b : (b < 0.0 ? -kDivEps : kDivEps);
  return a / d;
}

inline double protected_log(double x) { return std::log(std::fabs(x) + kLogEps); }

inline double clamped_exp(double x) { return std::exp(x < kExpClamp ? x : kExpClamp); }

inline double d_protected_log(double x) {
  return (x < 0.0 ? -1.0 : 1.0) / (std::fabs(x) + kLogEps);
}

inline double d_clamped_exp(double x) { return x < kExpClamp ? std::exp(x) : 0.0; }

/// Backend function table. All arrays may alias only as documented per entry.
struct Ops {
  const char* name;

  // out[i] = a[i] op b[i]; out may alias a or b.
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  void (*div_p)(const double* a, const double* b, double* out, std::size_t n);

  // out[i] = c * x[i]; out may alias x.
  void (*scale)(double c, const double* x, double* out, std::size_t n);
  // y[i] += c * x[i]
  void (*axpy)(double c, const double* x, double* y, std::size_t n);
  // out[i] += c * x[i] * y[i]
  void (*xyacc)(double c, const double* x, const double* y, double* out, std::size_t n);

  double (*sum)(const double* x, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
  // sum of squared differences
  double (*sse)(const double* a, const double* b, std::size_t n);

  // Backward of out = protected_div(x, y), fed upstream gradient g scaled by c:
  //   gx[i] += c * g[i] / D(y[i])
  //   gy[i] += |y[i]| >= kDivEps ? -c * g[i] * x[i] / y[i]^2 : 0
  void (*div_p_bwd)(double c, const double* g, const double* x, const double* y,
                    double* gx, double* gy, std::size_t n);

  // Adam step over n parameters. bc1/bc2 are the bias corrections
  // 1 - beta^t for the current step.
  void (*adam)(double* p, const double* g, double* m, double* v, std::size_t n,
               double lr, double beta1, double beta2, double eps, double bc1,
               double bc2);
};

const Ops& scalar_ops();

enum class Backend { Auto, Scalar, Avx2, Neon };

/// Selects the active backend. Auto picks the widest supported one, unless
/// the DGP_SIMD environment variable ("scalar", "avx2", "neon", "auto")
/// overrides it. Requesting an unsupported backend falls back to scalar.
void select_backend(Backend b);
Backend selected_backend();

/// The table currently in effect.
const Ops& ops();
const char* backend_name();

/// True if this CPU can run the named backend.
bool backend_available(Backend b);

}  // namespace dgp::kern
