#pragma once
#include <cmath>
#include <span>

namespace optit {

struct MeanCi {
  double mean = 0;
  double ci95 = 0;  // 1.96 * sd / sqrt(n); 0 for n < 2
  int n = 0;
};

inline MeanCi mean_ci95(std::span<const double> xs) {
  MeanCi r;
  r.n = static_cast<int>(xs.size());
  if (r.n == 0) {
    r.mean = std::nan("");
    return r;
  }
  double s = 0;
  for (double x : xs) s += x;
  r.mean = s / r.n;
  if (r.n < 2) return r;
  double ss = 0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  double sd = std::sqrt(ss / (r.n - 1));
  r.ci95 = 1.96 * sd / std::sqrt(static_cast<double>(r.n));
  return r;
}

// Unbiased sample variance; requires at least 2 samples.
inline double sample_variance(std::span<const double> xs) {
  int n = static_cast<int>(xs.size());
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= n;
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / (n - 1);
}

// Lower regularized incomplete gamma P(a, x), by series / continued fraction.
double regularized_gamma_p(double a, double x);

// Upper tail Q(a, x) = 1 - P(a, x).
inline double regularized_gamma_q(double a, double x) {
  return 1.0 - regularized_gamma_p(a, x);
}

// p-value of a chi-square statistic with `df` degrees of freedom.
inline double chi_square_p_value(double stat, double df) {
  return regularized_gamma_q(df / 2.0, stat / 2.0);
}

}  // namespace optit
