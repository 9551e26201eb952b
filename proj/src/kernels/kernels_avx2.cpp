// AVX2+FMA variants. Compiled with -mavx2 -mfma; only dispatched to when the
// CPU reports support.
#include <cmath>

#include "optit/kernels/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

namespace optit::kern {
namespace {

inline float hsum8(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 sh = _mm_movehdup_ps(lo);
  __m128 sums = _mm_add_ps(lo, sh);
  sh = _mm_movehl_ps(sh, sums);
  sums = _mm_add_ss(sums, sh);
  return _mm_cvtss_f32(sums);
}

inline double hsum4(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

// Cephes-style single precision exp, relative error ~2e-7.
inline __m256 exp256_ps(__m256 x) {
  const __m256 hi = _mm256_set1_ps(88.3762626647950f);
  const __m256 lo = _mm256_set1_ps(-87.3365478515625f);
  const __m256 log2e = _mm256_set1_ps(1.44269504088896341f);
  const __m256 c1 = _mm256_set1_ps(0.693359375f);
  const __m256 c2 = _mm256_set1_ps(-2.12194440e-4f);
  const __m256 one = _mm256_set1_ps(1.0f);

  x = _mm256_max_ps(_mm256_min_ps(x, hi), lo);
  __m256 fx = _mm256_fmadd_ps(x, log2e, _mm256_set1_ps(0.5f));
  fx = _mm256_floor_ps(fx);
  x = _mm256_fnmadd_ps(fx, c1, x);
  x = _mm256_fnmadd_ps(fx, c2, x);

  __m256 z = _mm256_mul_ps(x, x);
  __m256 y = _mm256_set1_ps(1.9875691500e-4f);
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(1.3981999507e-3f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(8.3334519073e-3f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(4.1665795894e-2f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(1.6666665459e-1f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(5.0000001201e-1f));
  y = _mm256_fmadd_ps(y, z, x);
  y = _mm256_add_ps(y, one);

  __m256i imm = _mm256_cvtps_epi32(fx);
  imm = _mm256_add_epi32(imm, _mm256_set1_epi32(127));
  imm = _mm256_slli_epi32(imm, 23);
  return _mm256_mul_ps(y, _mm256_castsi256_ps(imm));
}

void matvec_bias_f(const float* w, const float* b, const float* x, float* y,
                   int out, int in) {
  for (int i = 0; i < out; ++i) {
    const float* row = w + static_cast<std::size_t>(i) * in;
    __m256 a0 = _mm256_setzero_ps();
    __m256 a1 = _mm256_setzero_ps();
    __m256 a2 = _mm256_setzero_ps();
    __m256 a3 = _mm256_setzero_ps();
    int j = 0;
    for (; j + 32 <= in; j += 32) {
      a0 = _mm256_fmadd_ps(_mm256_loadu_ps(row + j), _mm256_loadu_ps(x + j), a0);
      a1 = _mm256_fmadd_ps(_mm256_loadu_ps(row + j + 8), _mm256_loadu_ps(x + j + 8), a1);
      a2 = _mm256_fmadd_ps(_mm256_loadu_ps(row + j + 16), _mm256_loadu_ps(x + j + 16), a2);
      a3 = _mm256_fmadd_ps(_mm256_loadu_ps(row + j + 24), _mm256_loadu_ps(x + j + 24), a3);
    }
    for (; j + 8 <= in; j += 8) {
      a0 = _mm256_fmadd_ps(_mm256_loadu_ps(row + j), _mm256_loadu_ps(x + j), a0);
    }
    float acc = hsum8(_mm256_add_ps(_mm256_add_ps(a0, a1), _mm256_add_ps(a2, a3)));
    for (; j < in; ++j) acc += row[j] * x[j];
    y[i] = acc + b[i];
  }
}

void matvec_bias_d(const double* w, const double* b, const double* x, double* y,
                   int out, int in) {
  for (int i = 0; i < out; ++i) {
    const double* row = w + static_cast<std::size_t>(i) * in;
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    int j = 0;
    for (; j + 8 <= in; j += 8) {
      a0 = _mm256_fmadd_pd(_mm256_loadu_pd(row + j), _mm256_loadu_pd(x + j), a0);
      a1 = _mm256_fmadd_pd(_mm256_loadu_pd(row + j + 4), _mm256_loadu_pd(x + j + 4), a1);
    }
    for (; j + 4 <= in; j += 4) {
      a0 = _mm256_fmadd_pd(_mm256_loadu_pd(row + j), _mm256_loadu_pd(x + j), a0);
    }
    double acc = hsum4(_mm256_add_pd(a0, a1));
    for (; j < in; ++j) acc += row[j] * x[j];
    y[i] = acc + b[i];
  }
}

void matvec_t_acc_f(const float* w, const float* dy, float* dx, int out, int in) {
  for (int i = 0; i < out; ++i) {
    float g = dy[i];
    if (g == 0.0f) continue;
    const float* row = w + static_cast<std::size_t>(i) * in;
    __m256 gv = _mm256_set1_ps(g);
    int j = 0;
    for (; j + 8 <= in; j += 8) {
      __m256 d = _mm256_fmadd_ps(gv, _mm256_loadu_ps(row + j), _mm256_loadu_ps(dx + j));
      _mm256_storeu_ps(dx + j, d);
    }
    for (; j < in; ++j) dx[j] += row[j] * g;
  }
}

void matvec_t_acc_d(const double* w, const double* dy, double* dx, int out, int in) {
  for (int i = 0; i < out; ++i) {
    double g = dy[i];
    if (g == 0.0) continue;
    const double* row = w + static_cast<std::size_t>(i) * in;
    __m256d gv = _mm256_set1_pd(g);
    int j = 0;
    for (; j + 4 <= in; j += 4) {
      __m256d d = _mm256_fmadd_pd(gv, _mm256_loadu_pd(row + j), _mm256_loadu_pd(dx + j));
      _mm256_storeu_pd(dx + j, d);
    }
    for (; j < in; ++j) dx[j] += row[j] * g;
  }
}

void ger_acc_f(float* dw, const float* dy, const float* x, int out, int in) {
  for (int i = 0; i < out; ++i) {
    float g = dy[i];
    if (g == 0.0f) continue;
    float* row = dw + static_cast<std::size_t>(i) * in;
    __m256 gv = _mm256_set1_ps(g);
    int j = 0;
    for (; j + 8 <= in; j += 8) {
      __m256 d = _mm256_fmadd_ps(gv, _mm256_loadu_ps(x + j), _mm256_loadu_ps(row + j));
      _mm256_storeu_ps(row + j, d);
    }
    for (; j < in; ++j) row[j] += g * x[j];
  }
}

void ger_acc_d(double* dw, const double* dy, const double* x, int out, int in) {
  for (int i = 0; i < out; ++i) {
    double g = dy[i];
    if (g == 0.0) continue;
    double* row = dw + static_cast<std::size_t>(i) * in;
    __m256d gv = _mm256_set1_pd(g);
    int j = 0;
    for (; j + 4 <= in; j += 4) {
      __m256d d = _mm256_fmadd_pd(gv, _mm256_loadu_pd(x + j), _mm256_loadu_pd(row + j));
      _mm256_storeu_pd(row + j, d);
    }
    for (; j < in; ++j) row[j] += g * x[j];
  }
}

void elu_f(const float* pre, float* act, int n) {
  const __m256 zero = _mm256_setzero_ps();
  const __m256 one = _mm256_set1_ps(1.0f);
  int i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 x = _mm256_loadu_ps(pre + i);
    __m256 neg = _mm256_sub_ps(exp256_ps(_mm256_min_ps(x, zero)), one);
    __m256 mask = _mm256_cmp_ps(x, zero, _CMP_GT_OQ);
    _mm256_storeu_ps(act + i, _mm256_blendv_ps(neg, x, mask));
  }
  for (; i < n; ++i) {
    float x = pre[i];
    act[i] = x > 0.0f ? x : std::expm1(x);
  }
}

void elu_bwd_from_act_f(const float* act, const float* dact, float* dpre, int n) {
  const __m256 zero = _mm256_setzero_ps();
  const __m256 one = _mm256_set1_ps(1.0f);
  int i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 a = _mm256_loadu_ps(act + i);
    __m256 d = _mm256_loadu_ps(dact + i);
    __m256 slope = _mm256_blendv_ps(_mm256_add_ps(a, one), one,
                                    _mm256_cmp_ps(a, zero, _CMP_GT_OQ));
    _mm256_storeu_ps(dpre + i, _mm256_mul_ps(d, slope));
  }
  for (; i < n; ++i) dpre[i] = dact[i] * (act[i] > 0.0f ? 1.0f : act[i] + 1.0f);
}

// Double-precision ELU is only exercised on the 64-bit oracle path; the scalar
// loop keeps it bit-identical to the reference backend.
void elu_d(const double* pre, double* act, int n) {
  for (int i = 0; i < n; ++i) {
    double x = pre[i];
    act[i] = x > 0.0 ? x : std::exp(x) - 1.0;
  }
}

void elu_bwd_from_act_d(const double* act, const double* dact, double* dpre, int n) {
  for (int i = 0; i < n; ++i) dpre[i] = dact[i] * (act[i] > 0.0 ? 1.0 : act[i] + 1.0);
}

void axpy_f(float a, const float* x, float* y, int n) {
  __m256 av = _mm256_set1_ps(a);
  int i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 r = _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i));
    _mm256_storeu_ps(y + i, r);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void axpy_d(double a, const double* x, double* y, int n) {
  __m256d av = _mm256_set1_pd(a);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, r);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

float dot_f(const float* x, const float* y, int n) {
  __m256 a0 = _mm256_setzero_ps();
  __m256 a1 = _mm256_setzero_ps();
  int i = 0;
  for (; i + 16 <= n; i += 16) {
    a0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), a0);
    a1 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i + 8), _mm256_loadu_ps(y + i + 8), a1);
  }
  for (; i + 8 <= n; i += 8) {
    a0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), a0);
  }
  float acc = hsum8(_mm256_add_ps(a0, a1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double dot_d(const double* x, const double* y, int n) {
  __m256d a0 = _mm256_setzero_pd();
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
  }
  double acc = hsum4(a0);
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void adamw_f(float* p, const float* g, float* m, float* v, int n, float lr,
             float b1, float b2, float eps, float wd, float bc1, float bc2) {
  const __m256 b1v = _mm256_set1_ps(b1);
  const __m256 b2v = _mm256_set1_ps(b2);
  const __m256 ob1 = _mm256_set1_ps(1.0f - b1);
  const __m256 ob2 = _mm256_set1_ps(1.0f - b2);
  const __m256 lrv = _mm256_set1_ps(lr);
  const __m256 epsv = _mm256_set1_ps(eps);
  const __m256 wdv = _mm256_set1_ps(wd);
  const __m256 ibc1 = _mm256_set1_ps(1.0f / bc1);
  const __m256 ibc2 = _mm256_set1_ps(1.0f / bc2);
  int i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 gv = _mm256_loadu_ps(g + i);
    __m256 mv = _mm256_fmadd_ps(b1v, _mm256_loadu_ps(m + i), _mm256_mul_ps(ob1, gv));
    __m256 vv = _mm256_fmadd_ps(b2v, _mm256_loadu_ps(v + i),
                                _mm256_mul_ps(ob2, _mm256_mul_ps(gv, gv)));
    _mm256_storeu_ps(m + i, mv);
    _mm256_storeu_ps(v + i, vv);
    __m256 mhat = _mm256_mul_ps(mv, ibc1);
    __m256 vhat = _mm256_mul_ps(vv, ibc2);
    __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(vhat), epsv);
    __m256 pv = _mm256_loadu_ps(p + i);
    __m256 upd = _mm256_fmadd_ps(wdv, pv, _mm256_div_ps(mhat, denom));
    _mm256_storeu_ps(p + i, _mm256_fnmadd_ps(lrv, upd, pv));
  }
  for (; i < n; ++i) {
    m[i] = b1 * m[i] + (1.0f - b1) * g[i];
    v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
    float mhat = m[i] * (1.0f / bc1);
    float vhat = v[i] * (1.0f / bc2);
    p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * p[i]);
  }
}

void adamw_d(double* p, const double* g, double* m, double* v, int n, double lr,
             double b1, double b2, double eps, double wd, double bc1, double bc2) {
  for (int i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    double mhat = m[i] / bc1;
    double vhat = v[i] / bc2;
    p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * p[i]);
  }
}

}  // namespace

template <>
const Ops<float>& avx2_ops<float>() {
  static const Ops<float> t = [] {
    Ops<float> o;
    o.matvec_bias = &matvec_bias_f;
    o.matvec_t_acc = &matvec_t_acc_f;
    o.ger_acc = &ger_acc_f;
    o.elu = &elu_f;
    o.elu_bwd_from_act = &elu_bwd_from_act_f;
    o.axpy = &axpy_f;
    o.dot = &dot_f;
    o.adamw = &adamw_f;
    return o;
  }();
  return t;
}

template <>
const Ops<double>& avx2_ops<double>() {
  static const Ops<double> t = [] {
    Ops<double> o;
    o.matvec_bias = &matvec_bias_d;
    o.matvec_t_acc = &matvec_t_acc_d;
    o.ger_acc = &ger_acc_d;
    o.elu = &elu_d;
    o.elu_bwd_from_act = &elu_bwd_from_act_d;
    o.axpy = &axpy_d;
    o.dot = &dot_d;
    o.adamw = &adamw_d;
    return o;
  }();
  return t;
}

}  // namespace optit::kern

#endif  // x86_64
