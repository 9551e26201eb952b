#pragma once
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "optit/kernels/kernels.hpp"
#include "optit/util/require.hpp"

namespace optit::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-5;
  double weight_decay = 1e-6;
};

// Decoupled weight-decay Adam over one flat parameter vector. Step size is
// passed per call so parameter groups (policy at alpha, value at 2*alpha) can
// share the implementation.
template <typename T>
class AdamW {
 public:
  AdamW() = default;
  AdamW(std::size_t n, AdamConfig cfg) : cfg_(cfg), m_(n, T(0)), v_(n, T(0)) {}

  std::int64_t step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

  void step(std::span<T> params, std::span<const T> grads, double step_size) {
    require(params.size() == m_.size() && grads.size() == m_.size(),
            "AdamW::step: size mismatch");
    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    kern::ops<T>().adamw(params.data(), grads.data(), m_.data(), v_.data(),
                         static_cast<int>(params.size()), static_cast<T>(step_size),
                         static_cast<T>(cfg_.beta1), static_cast<T>(cfg_.beta2),
                         static_cast<T>(cfg_.eps), static_cast<T>(cfg_.weight_decay),
                         static_cast<T>(bc1), static_cast<T>(bc2));
  }

 private:
  AdamConfig cfg_;
  std::int64_t t_ = 0;
  std::vector<T> m_, v_;
};

}  // namespace optit::nn
