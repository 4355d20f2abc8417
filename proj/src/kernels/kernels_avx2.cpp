// AVX2 backend. Elementwise ops are bit-identical to the scalar reference:
// one IEEE operation per rounding step, no FMA (and the build disables
// fp-contract globally so the scalar loops cannot silently fuse either).
// Reductions use four parallel lanes, so their accumulation order differs
// from scalar; callers treat them as tolerance-equal, not bit-equal.

#include "dgp/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace dgp::kern {
namespace {

const __m256d kSignMask = _mm256_set1_pd(-0.0);

inline __m256d substitute_denom(__m256d b) {
  __m256d absb = _mm256_andnot_pd(kSignMask, b);
  __m256d safe = _mm256_cmp_pd(absb, _mm256_set1_pd(kDivEps), _CMP_GE_OQ);
  __m256d neg = _mm256_cmp_pd(b, _mm256_setzero_pd(), _CMP_LT_OQ);
  __m256d sub = _mm256_blendv_pd(_mm256_set1_pd(kDivEps), _mm256_set1_pd(-kDivEps), neg);
  return _mm256_blendv_pd(sub, b, safe);
}

void v_add(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void v_sub(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void v_mul(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void v_div_p(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = substitute_denom(_mm256_loadu_pd(b + i));
    _mm256_storeu_pd(out + i, _mm256_div_pd(_mm256_loadu_pd(a + i), d));
  }
  for (; i < n; ++i) out[i] = protected_div(a[i], b[i]);
}

void v_scale(double c, const double* x, double* out, std::size_t n) {
  __m256d cv = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(cv, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = c * x[i];
}

void v_axpy(double c, const double* x, double* y, std::size_t n) {
  __m256d cv = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d t = _mm256_mul_pd(cv, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), t));
  }
  for (; i < n; ++i) y[i] += c * x[i];
}

void v_xyacc(double c, const double* x, const double* y, double* out, std::size_t n) {
  __m256d cv = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d t = _mm256_mul_pd(_mm256_mul_pd(cv, _mm256_loadu_pd(x + i)),
                              _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(out + i), t));
  }
  for (; i < n; ++i) out[i] += c * x[i] * y[i];
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
}

double v_sum(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double v_dot(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double v_sse(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void v_div_p_bwd(double c, const double* g, const double* x, const double* y,
                 double* gx, double* gy, std::size_t n) {
  __m256d cv = _mm256_set1_pd(c);
  __m256d ncv = _mm256_set1_pd(-c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d yv = _mm256_loadu_pd(y + i);
    __m256d gv = _mm256_loadu_pd(g + i);
    __m256d d = substitute_denom(yv);
    __m256d tgx = _mm256_div_pd(_mm256_mul_pd(cv, gv), d);
    _mm256_storeu_pd(gx + i, _mm256_add_pd(_mm256_loadu_pd(gx + i), tgx));
    __m256d absy = _mm256_andnot_pd(kSignMask, yv);
    __m256d safe = _mm256_cmp_pd(absy, _mm256_set1_pd(kDivEps), _CMP_GE_OQ);
    __m256d num = _mm256_mul_pd(_mm256_mul_pd(ncv, gv), _mm256_loadu_pd(x + i));
    __m256d tgy = _mm256_div_pd(num, _mm256_mul_pd(yv, yv));
    tgy = _mm256_and_pd(tgy, safe);
    _mm256_storeu_pd(gy + i, _mm256_add_pd(_mm256_loadu_pd(gy + i), tgy));
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
  __m256d b1 = _mm256_set1_pd(beta1), c1 = _mm256_set1_pd(1.0 - beta1);
  __m256d b2 = _mm256_set1_pd(beta2), c2 = _mm256_set1_pd(1.0 - beta2);
  __m256d lrv = _mm256_set1_pd(lr), epsv = _mm256_set1_pd(eps);
  __m256d ibc1 = _mm256_set1_pd(bc1), ibc2 = _mm256_set1_pd(bc2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d gv = _mm256_loadu_pd(g + i);
    __m256d mv = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)),
                               _mm256_mul_pd(c1, gv));
    __m256d vv = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                               _mm256_mul_pd(c2, _mm256_mul_pd(gv, gv)));
    _mm256_storeu_pd(m + i, mv);
    _mm256_storeu_pd(v + i, vv);
    __m256d mhat = _mm256_div_pd(mv, ibc1);
    __m256d vhat = _mm256_div_pd(vv, ibc2);
    __m256d step = _mm256_div_pd(_mm256_mul_pd(lrv, mhat),
                                 _mm256_add_pd(_mm256_sqrt_pd(vhat), epsv));
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * (g[i] * g[i]);
    double mhat = m[i] / bc1;
    double vhat = v[i] / bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

const Ops kAvx2 = {
    "avx2",  v_add, v_sub, v_mul, v_div_p,     v_scale, v_axpy,
    v_xyacc, v_sum, v_dot, v_sse, v_div_p_bwd, v_adam,
};

}  // namespace

const Ops* avx2_table() { return &kAvx2; }

}  // namespace dgp::kern

#else

namespace dgp::kern {
const Ops* avx2_table() { return nullptr; }
}  // namespace dgp::kern

#endif
