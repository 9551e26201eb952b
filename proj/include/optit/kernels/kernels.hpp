#pragma once
#include <string>

namespace optit::kern {

// Dense inner loops used by the network stack. Scalar reference kernels are
// always available; an AVX2+FMA variant is selected at runtime when the CPU
// supports it (override with OPTIT_KERNELS=scalar|avx2 or set_backend()).
// Both variants are equivalence-tested against each other.
enum class Backend { scalar, avx2 };

bool avx2_available();
Backend active_backend();
void set_backend(Backend b);  // throws if unsupported on this machine
const char* backend_name(Backend b);

template <typename T>
struct Ops {
  // y = W x + b, W row-major (out x in)
  void (*matvec_bias)(const T* w, const T* b, const T* x, T* y, int out, int in);
  // dx += W^T dy
  void (*matvec_t_acc)(const T* w, const T* dy, T* dx, int out, int in);
  // dW += dy x^T
  void (*ger_acc)(T* dw, const T* dy, const T* x, int out, int in);
  // act = elu(pre); in-place allowed
  void (*elu)(const T* pre, T* act, int n);
  // dpre = dact * elu'(pre), written in terms of act: act>0 ? 1 : act+1
  void (*elu_bwd_from_act)(const T* act, const T* dact, T* dpre, int n);
  // y += a x
  void (*axpy)(T a, const T* x, T* y, int n);
  T (*dot)(const T* x, const T* y, int n);
  // decoupled weight-decay Adam step; bc1/bc2 are the bias-correction factors
  void (*adamw)(T* p, const T* g, T* m, T* v, int n, T lr, T b1, T b2, T eps,
                T wd, T bc1, T bc2);
};

template <typename T>
const Ops<T>& ops();

// Reference tables, used by equivalence tests regardless of the active backend.
template <typename T>
const Ops<T>& scalar_ops();
template <typename T>
const Ops<T>& avx2_ops();  // throws if not compiled in / unsupported

}  // namespace optit::kern
