#pragma once
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "optit/util/require.hpp"
#include "optit/util/rng.hpp"

namespace optit {

// All log-space reductions subtract the max before exponentiating.
template <typename T>
double logsumexp(std::span<const T> x) {
  require(!x.empty(), "logsumexp: empty input");
  double m = -std::numeric_limits<double>::infinity();
  for (T v : x) m = std::max(m, static_cast<double>(v));
  if (!std::isfinite(m)) return m;
  double s = 0;
  for (T v : x) s += std::exp(static_cast<double>(v) - m);
  return m + std::log(s);
}

inline double logsumexp2(double a, double b) {
  double m = a > b ? a : b;
  if (!std::isfinite(m)) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

template <typename T>
void log_softmax(std::span<const T> logits, std::span<double> out) {
  require(logits.size() == out.size(), "log_softmax: size mismatch");
  double lse = logsumexp(logits);
  for (std::size_t i = 0; i < logits.size(); ++i)
    out[i] = static_cast<double>(logits[i]) - lse;
}

template <typename T>
void softmax(std::span<const T> logits, std::span<double> out) {
  require(logits.size() == out.size(), "softmax: size mismatch");
  double lse = logsumexp(logits);
  for (std::size_t i = 0; i < logits.size(); ++i)
    out[i] = std::exp(static_cast<double>(logits[i]) - lse);
}

// Samples an index proportionally to exp(logits). At most 16 categories.
template <typename T>
int sample_logits(std::span<const T> logits, Rng& rng) {
  require(logits.size() >= 1 && logits.size() <= 16,
          "sample_logits: unsupported category count");
  double p[16];
  double m = -std::numeric_limits<double>::infinity();
  for (T v : logits) m = std::max(m, static_cast<double>(v));
  double total = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(static_cast<double>(logits[i]) - m);
    total += p[i];
  }
  double target = rng.uniform() * total;
  double acc = 0;
  for (std::size_t i = 0; i + 1 < logits.size(); ++i) {
    acc += p[i];
    if (target < acc) return static_cast<int>(i);
  }
  return static_cast<int>(logits.size()) - 1;
}

}  // namespace optit
