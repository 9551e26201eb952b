#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include "optit/kernels/kernels.hpp"

namespace optit::kern {

bool avx2_available() {
#if defined(OPTIT_HAVE_AVX2_BUILD) && (defined(__x86_64__) || defined(_M_X64))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

Backend initial_backend() {
  const char* env = std::getenv("OPTIT_KERNELS");
  if (env != nullptr) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "avx2") == 0) {
      if (!avx2_available())
        throw std::runtime_error("OPTIT_KERNELS=avx2 requested but unsupported");
      return Backend::avx2;
    }
    throw std::runtime_error("OPTIT_KERNELS must be 'scalar' or 'avx2'");
  }
  return avx2_available() ? Backend::avx2 : Backend::scalar;
}

std::atomic<Backend>& backend_slot() {
  static std::atomic<Backend> b{initial_backend()};
  return b;
}

}  // namespace

Backend active_backend() { return backend_slot().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (b == Backend::avx2 && !avx2_available())
    throw std::runtime_error("set_backend: avx2 not available on this CPU/build");
  backend_slot().store(b, std::memory_order_relaxed);
}

const char* backend_name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

template <>
const Ops<float>& ops<float>() {
  return active_backend() == Backend::avx2 ? avx2_ops<float>() : scalar_ops<float>();
}

template <>
const Ops<double>& ops<double>() {
  return active_backend() == Backend::avx2 ? avx2_ops<double>() : scalar_ops<double>();
}

#if !defined(OPTIT_HAVE_AVX2_BUILD) || !(defined(__x86_64__) || defined(_M_X64))
template <>
const Ops<float>& avx2_ops<float>() {
  throw std::runtime_error("avx2 kernels not compiled in");
}
template <>
const Ops<double>& avx2_ops<double>() {
  throw std::runtime_error("avx2 kernels not compiled in");
}
#endif

}  // namespace optit::kern
