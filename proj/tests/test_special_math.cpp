#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "vesbo/rng.hpp"
#include "vesbo/special_math.hpp"

using namespace vesbo;

namespace {
constexpr double kEulerGamma = 0.57721566490153286;
}

TEST_CASE("digamma matches closed-form anchors") {
  // psi(1) = -gamma, psi(1/2) = -gamma - 2 ln 2, psi(2) = 1 - gamma.
  CHECK(digamma(1.0) == doctest::Approx(-kEulerGamma).epsilon(1e-12));
  CHECK(digamma(0.5) ==
        doctest::Approx(-kEulerGamma - 2.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(digamma(2.0) == doctest::Approx(1.0 - kEulerGamma).epsilon(1e-12));
  // Large-argument asymptotics: psi(x) ~ log(x) - 1/(2x).
  CHECK(digamma(1000.0) ==
        doctest::Approx(std::log(1000.0) - 0.5e-3).epsilon(1e-7));
}

TEST_CASE("digamma satisfies the recurrence psi(x+1) = psi(x) + 1/x") {
  RngStream rng(12345);
  for (int i = 0; i < 200; ++i) {
    const double x = 0.01 + 120.0 * rng.uniform();
    const double lhs = digamma(x + 1.0);
    const double rhs = digamma(x) + 1.0 / x;
    CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("digamma rejects non-positive and non-finite input") {
  CHECK_THROWS_AS(digamma(0.0), std::domain_error);
  CHECK_THROWS_AS(digamma(-3.0), std::domain_error);
  CHECK_THROWS_AS(digamma(std::nan("")), std::domain_error);
}

TEST_CASE("log_gamma matches known values and the functional equation") {
  CHECK(log_gamma(1.0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(log_gamma(2.0) == doctest::Approx(0.0).epsilon(1e-14));
  // Gamma(6) = 120.
  CHECK(std::exp(log_gamma(6.0)) == doctest::Approx(120.0).epsilon(1e-12));
  // Gamma(1/2) = sqrt(pi).
  CHECK(log_gamma(0.5) ==
        doctest::Approx(0.57236494292469997).epsilon(1e-12));
  // Gamma(x+1) = x Gamma(x) across the domain.
  RngStream rng(777);
  for (int i = 0; i < 500; ++i) {
    const double x = 0.05 + 160.0 * rng.uniform();
    const double ratio = std::exp(log_gamma(x + 1.0) - log_gamma(x));
    CHECK(ratio == doctest::Approx(x).epsilon(1e-10));
  }
  CHECK_THROWS_AS(log_gamma(0.0), std::domain_error);
  CHECK_THROWS_AS(log_gamma(-1.5), std::domain_error);
}

TEST_CASE("xi(k) = log k - digamma(k) is positive and strictly decreasing") {
  // This monotonicity is what makes the shape equation uniquely solvable.
  double prev = std::numeric_limits<double>::infinity();
  for (double k = 1e-3; k <= 500.0; k *= 1.07) {
    const double xi = std::log(k) - digamma(k);
    CHECK(xi > 0.0);
    CHECK(xi < prev);
    prev = xi;
  }
  // Anchor: xi(10) = log 10 - psi(10).
  CHECK(std::log(10.0) - digamma(10.0) ==
        doctest::Approx(0.050832503927324968).epsilon(1e-12));
}

TEST_CASE("std_normal density and distribution anchors") {
  const NormalEval at0 = std_normal(0.0);
  CHECK(at0.pdf == doctest::Approx(0.3989422804014327).epsilon(1e-14));
  CHECK(at0.cdf == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(at0.log_cdf == doctest::Approx(std::log(0.5)).epsilon(1e-13));

  CHECK(std_normal(1.0).cdf ==
        doctest::Approx(0.84134474606854293).epsilon(1e-13));
  // Symmetry: Phi(x) + Phi(-x) = 1.
  for (double x : {0.3, 1.1, 2.7, 4.0}) {
    CHECK(std_normal(x).cdf + std_normal(-x).cdf ==
          doctest::Approx(1.0).epsilon(1e-13));
  }
  // Upper tail saturates to 1 without overshooting.
  CHECK(std_normal(30.0).cdf == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std_normal(30.0).cdf <= 1.0);
}

TEST_CASE("std_normal log_cdf stays accurate deep in the lower tail") {
  // Frozen high-precision reference for log Phi(-10).
  CHECK(std_normal(-10.0).log_cdf ==
        doctest::Approx(-53.23128515051247).epsilon(1e-12));
  // Far below the erfc underflow point the value must stay finite and
  // track the leading asymptotic -x^2/2 - log(-x) - log sqrt(2 pi).
  for (double x : {-30.0, -40.0, -100.0}) {
    const double lc = std_normal(x).log_cdf;
    CHECK(std::isfinite(lc));
    const double leading =
        -0.5 * x * x - std::log(-x) - 0.91893853320467274;
    CHECK(lc == doctest::Approx(leading).epsilon(1e-3));
    CHECK(lc < std_normal(x + 0.5).log_cdf);  // monotone increasing
  }
  // Continuity across the asymptotic switch near x = -36.
  const double below = std_normal(-36.001).log_cdf;
  const double above = std_normal(-35.999).log_cdf;
  CHECK(std::abs(below - above) < 0.2);
  CHECK_THROWS_AS(std_normal(std::nan("")), std::domain_error);
}

TEST_CASE("brent_root finds classical roots") {
  const double half_pi =
      brent_root([](double x) { return std::cos(x); }, 1.0, 2.0);
  CHECK(half_pi == doctest::Approx(1.5707963267948966).epsilon(1e-10));

  const double cubic = brent_root(
      [](double x) { return x * x * x - 2.0 * x - 5.0; }, 2.0, 3.0);
  CHECK(cubic == doctest::Approx(2.0945514815423265).epsilon(1e-10));

  // Root at a bracket endpoint is fine.
  const double at_end =
      brent_root([](double x) { return x - 1.0; }, 1.0, 2.0);
  CHECK(at_end == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("brent_root rejects brackets without a sign change") {
  CHECK_THROWS_AS(
      brent_root([](double x) { return x * x + 1.0; }, -1.0, 1.0),
      std::invalid_argument);
  CHECK_THROWS_AS(brent_root([](double x) { return x; }, 2.0, 1.0),
                  std::invalid_argument);
}

TEST_CASE("brent_min locates interior minima") {
  // d/dx (x^4 - x) = 0 at x = (1/4)^(1/3).
  const double quartic =
      brent_min([](double x) { return x * x * x * x - x; }, 0.0, 1.0);
  CHECK(quartic == doctest::Approx(0.62996052494743658).epsilon(1e-8));

  const double parabola = brent_min(
      [](double x) { return (x - 2.5) * (x - 2.5); }, 0.0, 10.0);
  CHECK(parabola == doctest::Approx(2.5).epsilon(1e-8));

  // A monotone function pins the minimizer to the boundary.
  const double edge = brent_min([](double x) { return x; }, 0.0, 1.0);
  CHECK(edge == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("ks_survival matches the alternating series") {
  CHECK(ks_survival(0.0) == doctest::Approx(1.0));
  // Q(sqrt(5)) = 2 e^{-10} - 2 e^{-40} + ...
  CHECK(ks_survival(std::sqrt(5.0)) ==
        doctest::Approx(9.0799859524961048e-05).epsilon(1e-10));
  // Monotone decreasing, bounded in [0, 1].
  double prev = 1.0;
  for (double z = 0.05; z < 4.0; z += 0.05) {
    const double q = ks_survival(z);
    CHECK(q >= 0.0);
    CHECK(q <= prev + 1e-15);
    prev = q;
  }
}

TEST_CASE("ks_two_sample worked examples") {
  // Two-point case: ECDF gap 0.5 at t in [1.5, 2).
  const KsResult two_pt = ks_two_sample({1.0, 2.0}, {1.5, 2.5});
  CHECK(two_pt.statistic_d == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(two_pt.n1 == 2);
  CHECK(two_pt.n2 == 2);

  // Fully separated samples of size 10: D = 1, z = sqrt(5).
  std::vector<double> lo(10), hi(10);
  for (int i = 0; i < 10; ++i) {
    lo[i] = static_cast<double>(i);
    hi[i] = 100.0 + i;
  }
  const KsResult sep = ks_two_sample(lo, hi);
  CHECK(sep.statistic_d == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sep.p_value ==
        doctest::Approx(9.0799859524961048e-05).epsilon(1e-8));

  // Swapping the samples preserves the statistic and p-value exactly.
  const KsResult two_pt_swapped = ks_two_sample({1.5, 2.5}, {1.0, 2.0});
  CHECK(two_pt_swapped.statistic_d == two_pt.statistic_d);
  CHECK(two_pt_swapped.p_value == two_pt.p_value);
  const KsResult sep_swapped = ks_two_sample(hi, lo);
  CHECK(sep_swapped.statistic_d == sep.statistic_d);
  CHECK(sep_swapped.p_value == sep.p_value);
}

TEST_CASE("ks_two_sample handles ties and identical samples") {
  // Identical samples: D = 0, p = 1.
  const std::vector<double> same{0.1, 0.4, 0.4, 0.9};
  const KsResult id = ks_two_sample(same, same);
  CHECK(id.statistic_d == doctest::Approx(0.0));
  CHECK(id.p_value == doctest::Approx(1.0).epsilon(1e-12));

  // Tied values across samples must advance both ECDFs together.
  const KsResult tied = ks_two_sample({1.0, 1.0, 2.0}, {1.0, 2.0, 2.0});
  CHECK(tied.statistic_d == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  CHECK_THROWS_AS(ks_two_sample({}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(ks_two_sample({std::nan("")}, {1.0}),
                  std::invalid_argument);
}

TEST_CASE("ks decision boundary at n = 10 and alpha = 0.05") {
  // With n1 = n2 = 10, D = 0.6 gives p just above 0.05 and D = 0.7 just
  // below, so these samples bracket the pass/fail boundary used by the
  // equivalence study.
  std::vector<double> x(10), y_pass(10), y_fail(10);
  for (int i = 0; i < 10; ++i) x[i] = i;
  // Shift 6 of 10 values above the x range: D = 0.6.
  for (int i = 0; i < 10; ++i) y_pass[i] = (i < 4) ? x[i] + 0.5 : 100.0 + i;
  // Shift 7 of 10: D = 0.7.
  for (int i = 0; i < 10; ++i) y_fail[i] = (i < 3) ? x[i] + 0.5 : 100.0 + i;

  const KsResult pass = ks_two_sample(x, y_pass);
  CHECK(pass.statistic_d == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(pass.p_value ==
        doctest::Approx(0.054646330113863557).epsilon(1e-8));
  CHECK(pass.p_value >= 0.05);

  const KsResult fail = ks_two_sample(x, y_fail);
  CHECK(fail.statistic_d == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(fail.p_value ==
        doctest::Approx(0.014893159992088918).epsilon(1e-8));
  CHECK(fail.p_value < 0.05);
}

TEST_CASE("ks null rejection rate sits near the nominal level") {
  // Same-distribution samples should be rejected at roughly alpha = 0.05;
  // the asymptotic p-value is slightly conservative at n = 100.
  RngStream rng(2024);
  const int trials = 2000;
  int rejected = 0;
  std::vector<double> a(100), b(100);
  for (int t = 0; t < trials; ++t) {
    for (auto& v : a) v = rng.uniform();
    for (auto& v : b) v = rng.uniform();
    if (ks_two_sample(a, b).p_value < 0.05) ++rejected;
  }
  const double rate = static_cast<double>(rejected) / trials;
  CHECK(rate >= 0.02);
  CHECK(rate <= 0.08);
}
