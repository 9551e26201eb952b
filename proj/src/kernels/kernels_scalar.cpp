#include <cmath>

#include "optit/kernels/kernels.hpp"

namespace optit::kern {
namespace {

template <typename T>
void matvec_bias_s(const T* w, const T* b, const T* x, T* y, int out, int in) {
  for (int i = 0; i < out; ++i) {
    const T* row = w + static_cast<std::size_t>(i) * in;
    T acc = 0;
    for (int j = 0; j < in; ++j) acc += row[j] * x[j];
    y[i] = acc + b[i];
  }
}

template <typename T>
void matvec_t_acc_s(const T* w, const T* dy, T* dx, int out, int in) {
  for (int i = 0; i < out; ++i) {
    const T* row = w + static_cast<std::size_t>(i) * in;
    T g = dy[i];
    if (g == T(0)) continue;
    for (int j = 0; j < in; ++j) dx[j] += row[j] * g;
  }
}

template <typename T>
void ger_acc_s(T* dw, const T* dy, const T* x, int out, int in) {
  for (int i = 0; i < out; ++i) {
    T* row = dw + static_cast<std::size_t>(i) * in;
    T g = dy[i];
    if (g == T(0)) continue;
    for (int j = 0; j < in; ++j) row[j] += g * x[j];
  }
}

template <typename T>
void elu_s(const T* pre, T* act, int n) {
  for (int i = 0; i < n; ++i) {
    T x = pre[i];
    act[i] = x > T(0) ? x : static_cast<T>(std::exp(static_cast<double>(x)) - 1.0);
  }
}

template <typename T>
void elu_bwd_from_act_s(const T* act, const T* dact, T* dpre, int n) {
  for (int i = 0; i < n; ++i) {
    dpre[i] = dact[i] * (act[i] > T(0) ? T(1) : act[i] + T(1));
  }
}

template <typename T>
void axpy_s(T a, const T* x, T* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
T dot_s(const T* x, const T* y, int n) {
  T acc = 0;
  for (int i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

template <typename T>
void adamw_s(T* p, const T* g, T* m, T* v, int n, T lr, T b1, T b2, T eps, T wd,
             T bc1, T bc2) {
  for (int i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + (T(1) - b1) * g[i];
    v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
    T mhat = m[i] / bc1;
    T vhat = v[i] / bc2;
    p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * p[i]);
  }
}

template <typename T>
Ops<T> make_scalar() {
  Ops<T> o;
  o.matvec_bias = &matvec_bias_s<T>;
  o.matvec_t_acc = &matvec_t_acc_s<T>;
  o.ger_acc = &ger_acc_s<T>;
  o.elu = &elu_s<T>;
  o.elu_bwd_from_act = &elu_bwd_from_act_s<T>;
  o.axpy = &axpy_s<T>;
  o.dot = &dot_s<T>;
  o.adamw = &adamw_s<T>;
  return o;
}

}  // namespace

template <>
const Ops<float>& scalar_ops<float>() {
  static const Ops<float> t = make_scalar<float>();
  return t;
}

template <>
const Ops<double>& scalar_ops<double>() {
  static const Ops<double> t = make_scalar<double>();
  return t;
}

}  // namespace optit::kern
