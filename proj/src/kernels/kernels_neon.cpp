// NEON backend (aarch64). Same contract as the AVX2 backend: elementwise ops
// bit-identical to scalar, reductions tolerance-equal. float64x2_t gives two
// lanes; vdivq_f64 and vsqrtq_f64 are IEEE correctly rounded.

#include "dgp/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace dgp::kern {
namespace {

inline float64x2_t substitute_denom(float64x2_t b) {
  float64x2_t absb = vabsq_f64(b);
  uint64x2_t safe = vcgeq_f64(absb, vdupq_n_f64(kDivEps));
  uint64x2_t neg = vcltq_f64(b, vdupq_n_f64(0.0));
  float64x2_t sub = vbslq_f64(neg, vdupq_n_f64(-kDivEps), vdupq_n_f64(kDivEps));
  return vbslq_f64(safe, b, sub);
}

void v_add(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void v_sub(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void v_mul(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void v_div_p(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t d = substitute_denom(vld1q_f64(b + i));
    vst1q_f64(out + i, vdivq_f64(vld1q_f64(a + i), d));
  }
  for (; i < n; ++i) out[i] = protected_div(a[i], b[i]);
}

void v_scale(double c, const double* x, double* out, std::size_t n) {
  float64x2_t cv = vdupq_n_f64(c);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(cv, vld1q_f64(x + i)));
  for (; i < n; ++i) out[i] = c * x[i];
}

void v_axpy(double c, const double* x, double* y, std::size_t n) {
  float64x2_t cv = vdupq_n_f64(c);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t t = vmulq_f64(cv, vld1q_f64(x + i));
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), t));
  }
  for (; i < n; ++i) y[i] += c * x[i];
}

void v_xyacc(double c, const double* x, const double* y, double* out, std::size_t n) {
  float64x2_t cv = vdupq_n_f64(c);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t t = vmulq_f64(vmulq_f64(cv, vld1q_f64(x + i)), vld1q_f64(y + i));
    vst1q_f64(out + i, vaddq_f64(vld1q_f64(out + i), t));
  }
  for (; i < n; ++i) out[i] += c * x[i] * y[i];
}

double v_sum(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
  double s = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
  for (; i < n; ++i) s += x[i];
  return s;
}

double v_dot(const double* x, const double* y, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  double s = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double v_sse(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    acc = vaddq_f64(acc, vmulq_f64(d, d));
  }
  double s = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
  for (; i < n; ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void v_div_p_bwd(double c, const double* g, const double* x, const double* y,
                 double* gx, double* gy, std::size_t n) {
  float64x2_t cv = vdupq_n_f64(c);
  float64x2_t ncv = vdupq_n_f64(-c);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t yv = vld1q_f64(y + i);
    float64x2_t gv = vld1q_f64(g + i);
    float64x2_t d = substitute_denom(yv);
    float64x2_t tgx = vdivq_f64(vmulq_f64(cv, gv), d);
    vst1q_f64(gx + i, vaddq_f64(vld1q_f64(gx + i), tgx));
    uint64x2_t safe = vcgeq_f64(vabsq_f64(yv), vdupq_n_f64(kDivEps));
    float64x2_t num = vmulq_f64(vmulq_f64(ncv, gv), vld1q_f64(x + i));
    float64x2_t tgy = vdivq_f64(num, vmulq_f64(yv, yv));
    tgy = vbslq_f64(safe, tgy, vdupq_n_f64(0.0));
    vst1q_f64(gy + i, vaddq_f64(vld1q_f64(gy + i), tgy));
  }
  for (; i < n; ++i) {
    double yi = y[i];
    bool safe = std::fabs(yi) >= kDivEps;
    double d = safe ? yi : (yi < 0.0 ? -kDivEps : kDivEps);
    gx[i] += c * g[i] / d;
    if (safe) gy[i] += -c * g[i] * x[i] / (yi * yi);
  }
}

void v_adam(double* p, const double* g, double* m, double* v, std::size_t n,
            double lr, double beta1, double beta2, double eps, double bc1,
            double bc2) {
  float64x2_t b1 = vdupq_n_f64(beta1), c1 = vdupq_n_f64(1.0 - beta1);
  float64x2_t b2 = vdupq_n_f64(beta2), c2 = vdupq_n_f64(1.0 - beta2);
  float64x2_t lrv = vdupq_n_f64(lr), epsv = vdupq_n_f64(eps);
  float64x2_t ibc1 = vdupq_n_f64(bc1), ibc2 = vdupq_n_f64(bc2);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t gv = vld1q_f64(g + i);
    float64x2_t mv = vaddq_f64(vmulq_f64(b1, vld1q_f64(m + i)), vmulq_f64(c1, gv));
    float64x2_t vv = vaddq_f64(vmulq_f64(b2, vld1q_f64(v + i)),
                               vmulq_f64(c2, vmulq_f64(gv, gv)));
    vst1q_f64(m + i, mv);
    vst1q_f64(v + i, vv);
    float64x2_t mhat = vdivq_f64(mv, ibc1);
    float64x2_t vhat = vdivq_f64(vv, ibc2);
    float64x2_t step =
        vdivq_f64(vmulq_f64(lrv, mhat), vaddq_f64(vsqrtq_f64(vhat), epsv));
    vst1q_f64(p + i, vsubq_f64(vld1q_f64(p + i), step));
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * (g[i] * g[i]);
    double mhat = m[i] / bc1;
    double vhat = v[i] / bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

const Ops kNeon = {
    "neon",  v_add, v_sub, v_mul, v_div_p,     v_scale, v_axpy,
    v_xyacc, v_sum, v_dot, v_sse, v_div_p_bwd, v_adam,
};

}  // namespace

const Ops* neon_table() { return &kNeon; }

}  // namespace dgp::kern

#else

namespace dgp::kern {
const Ops* neon_table() { return nullptr; }
}  // namespace dgp::kern

#endif
