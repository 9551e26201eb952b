#include <doctest.h>

#include <atomic>
#include <cmath>
#include <vector>

#include "optit/kernels/kernels.hpp"
#include "optit/util/numerics.hpp"
#include "optit/util/rng.hpp"
#include "optit/util/stats.hpp"
#include "optit/util/threadpool.hpp"

using namespace optit;

TEST_CASE("rng: determinism and stream independence") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

  // Streams derived from the key do not depend on draws already made.
  Rng c(42);
  Rng s_before = c.stream(5);
  for (int i = 0; i < 17; ++i) c.next_u64();
  Rng s_after = c.stream(5);
  for (int i = 0; i < 100; ++i) CHECK(s_before.next_u64() == s_after.next_u64());

  // Distinct seeds and distinct streams disagree.
  Rng d(43);
  Rng e(42);
  bool same = true;
  for (int i = 0; i < 16; ++i) same = same && d.next_u64() == e.next_u64();
  CHECK_FALSE(same);
}

TEST_CASE("rng: uniform range and categorical") {
  Rng r(1);
  for (int i = 0; i < 10000; ++i) {
    double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  std::vector<double> w = {0.0, 0.25, 0.75};
  int counts[3] = {0, 0, 0};
  for (int i = 0; i < 20000; ++i) ++counts[r.categorical(w)];
  CHECK(counts[0] == 0);
  CHECK(counts[1] > 4000);
  CHECK(counts[2] > 12000);
}

TEST_CASE("numerics: logsumexp and log_softmax stability") {
  std::vector<double> big = {80.0, 79.0, -80.0};
  double lse = logsumexp(std::span<const double>(big));
  CHECK(std::isfinite(lse));
  CHECK(lse == doctest::Approx(80.0 + std::log(1.0 + std::exp(-1.0))).epsilon(1e-12));

  std::vector<double> out(3);
  log_softmax(std::span<const double>(big), std::span<double>(out));
  double total = 0;
  for (double v : out) total += std::exp(v);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("stats: chi-square tail against closed forms") {
  // df=2: Q(x) = exp(-x/2); df=4: Q(x) = (1 + x/2) exp(-x/2)
  CHECK(chi_square_p_value(3.0, 2) == doctest::Approx(std::exp(-1.5)).epsilon(1e-10));
  CHECK(chi_square_p_value(5.0, 4) ==
        doctest::Approx((1.0 + 2.5) * std::exp(-2.5)).epsilon(1e-10));
  CHECK(mean_ci95(std::vector<double>{1, 1, 1}).ci95 == doctest::Approx(0.0));
}

TEST_CASE("threadpool: covers the range exactly once") {
  ThreadPool pool(5);
  std::vector<std::atomic<int>> hits(1000);
  pool.parallel_for(1000, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) hits[i].fetch_add(1);
  });
  for (auto& h : hits) CHECK(h.load() == 1);
  // reuse works
  pool.parallel_for(1000, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) hits[i].fetch_add(1);
  });
  for (auto& h : hits) CHECK(h.load() == 2);
}

namespace {

template <typename T>
void fill_random(std::vector<T>& v, Rng& rng, double scale = 1.0) {
  for (auto& x : v) x = static_cast<T>((rng.uniform() * 2 - 1) * scale);
}

template <typename T>
void check_kernel_equivalence(double tol) {
  if (!kern::avx2_available()) return;
  const auto& s = kern::scalar_ops<T>();
  const auto& a = kern::avx2_ops<T>();
  Rng rng(99);
  // deliberately awkward sizes to exercise vector tails
  for (int in : {1, 3, 8, 17, 31, 64, 77, 400}) {
    for (int out : {1, 5, 16, 33}) {
      std::vector<T> w(static_cast<std::size_t>(out) * in), b(out), x(in);
      fill_random(w, rng);
      fill_random(b, rng);
      fill_random(x, rng);
      std::vector<T> y1(out), y2(out);
      s.matvec_bias(w.data(), b.data(), x.data(), y1.data(), out, in);
      a.matvec_bias(w.data(), b.data(), x.data(), y2.data(), out, in);
      for (int i = 0; i < out; ++i) {
        CHECK(std::abs(y1[i] - y2[i]) <= tol * (1.0 + std::abs(static_cast<double>(y1[i]))));
      }

      std::vector<T> dy(out), dx1(in, T(0)), dx2(in, T(0));
      fill_random(dy, rng);
      s.matvec_t_acc(w.data(), dy.data(), dx1.data(), out, in);
      a.matvec_t_acc(w.data(), dy.data(), dx2.data(), out, in);
      for (int i = 0; i < in; ++i) {
        CHECK(std::abs(dx1[i] - dx2[i]) <= tol * (1.0 + std::abs(static_cast<double>(dx1[i]))));
      }

      std::vector<T> g1(w.size(), T(0)), g2(w.size(), T(0));
      s.ger_acc(g1.data(), dy.data(), x.data(), out, in);
      a.ger_acc(g2.data(), dy.data(), x.data(), out, in);
      for (std::size_t i = 0; i < g1.size(); ++i) {
        CHECK(std::abs(g1[i] - g2[i]) <= tol * (1.0 + std::abs(static_cast<double>(g1[i]))));
      }
    }
  }
  for (int n : {1, 7, 8, 9, 63, 64, 65, 1000}) {
    std::vector<T> pre(n), a1(n), a2(n);
    fill_random(pre, rng, 4.0);
    s.elu(pre.data(), a1.data(), n);
    a.elu(pre.data(), a2.data(), n);
    for (int i = 0; i < n; ++i) {
      CHECK(std::abs(a1[i] - a2[i]) <= tol * (1.0 + std::abs(static_cast<double>(a1[i]))));
      CHECK(std::isfinite(static_cast<double>(a2[i])));
    }
    std::vector<T> dact(n), dp1(n), dp2(n);
    fill_random(dact, rng);
    s.elu_bwd_from_act(a1.data(), dact.data(), dp1.data(), n);
    a.elu_bwd_from_act(a1.data(), dact.data(), dp2.data(), n);
    for (int i = 0; i < n; ++i) {
      CHECK(std::abs(dp1[i] - dp2[i]) <= tol * (1.0 + std::abs(static_cast<double>(dp1[i]))));
    }

    std::vector<T> xs(n), y1(n), y2(n);
    fill_random(xs, rng);
    fill_random(y1, rng);
    y2 = y1;
    s.axpy(T(0.37), xs.data(), y1.data(), n);
    a.axpy(T(0.37), xs.data(), y2.data(), n);
    for (int i = 0; i < n; ++i) {
      CHECK(std::abs(y1[i] - y2[i]) <= tol * (1.0 + std::abs(static_cast<double>(y1[i]))));
    }
    T d1 = s.dot(xs.data(), y1.data(), n);
    T d2 = a.dot(xs.data(), y1.data(), n);
    CHECK(std::abs(d1 - d2) <= tol * n * (1.0 + std::abs(static_cast<double>(d1))));

    std::vector<T> p1(n), p2, g(n), m1(n, T(0)), v1(n, T(0)), m2, v2;
    fill_random(p1, rng);
    fill_random(g, rng);
    p2 = p1;
    m2 = m1;
    v2 = v1;
    s.adamw(p1.data(), g.data(), m1.data(), v1.data(), n, T(1e-3), T(0.9), T(0.99),
            T(1e-5), T(1e-6), T(0.1), T(0.01));
    a.adamw(p2.data(), g.data(), m2.data(), v2.data(), n, T(1e-3), T(0.9), T(0.99),
            T(1e-5), T(1e-6), T(0.1), T(0.01));
    for (int i = 0; i < n; ++i) {
      CHECK(std::abs(p1[i] - p2[i]) <= tol * (1.0 + std::abs(static_cast<double>(p1[i]))));
    }
  }
}

}  // namespace

TEST_CASE("kernels: avx2 variants match the scalar reference") {
  if (!kern::avx2_available()) {
    MESSAGE("avx2 not available; skipping equivalence checks");
    return;
  }
  check_kernel_equivalence<float>(5e-5);
  check_kernel_equivalence<double>(1e-12);
}

TEST_CASE("kernels: backend selection") {
  kern::Backend prev = kern::active_backend();
  kern::set_backend(kern::Backend::scalar);
  CHECK(kern::active_backend() == kern::Backend::scalar);
  kern::set_backend(prev);
}
