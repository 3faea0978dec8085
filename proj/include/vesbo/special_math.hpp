#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace vesbo {

// Digamma function psi(x) = d/dx log Gamma(x) for x > 0.
// Recurrence-shifts the argument above 6 and applies the Bernoulli
// asymptotic series.  Throws std::domain_error for non-positive or
// non-finite input.
double digamma(double x);

// log Gamma(x) for x > 0.  Throws std::domain_error otherwise.
double log_gamma(double x);

struct NormalEval {
  double pdf;
  double cdf;
  double log_cdf;
};

// Standard normal density, distribution function and its logarithm at x.
// log_cdf stays accurate far into the lower tail (x ~ -30 and beyond)
// where cdf itself underflows toward zero.
NormalEval std_normal(double x);

// Root of f on [lo, hi] by Brent's method.  Requires a sign change over
// the bracket (std::invalid_argument otherwise); converges when |f| <= tol
// or the bracket width falls below tol, within 200 iterations.
double brent_root(const std::function<double(double)>& f, double lo,
                  double hi, double tol = 1e-10);

// Local minimizer of f on [lo, hi] by Brent's golden-section / parabolic
// interpolation scheme, to absolute x-tolerance tol, within 200 iterations.
double brent_min(const std::function<double(double)>& f, double lo,
                 double hi, double tol = 1e-10);

// Kolmogorov distribution survival function
//   Q(z) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 z^2),
// truncated when a term drops below 1e-12, clipped to [0, 1].
double ks_survival(double z);

struct KsResult {
  double statistic_d;
  double p_value;
  std::size_t n1;
  std::size_t n2;
};

// Two-sample Kolmogorov-Smirnov test.  The statistic is the exact
// supremum gap between the two empirical CDFs (ties handled by advancing
// both samples past equal values); the p-value uses the asymptotic
// Kolmogorov distribution at z = sqrt(n1 n2 / (n1 + n2)) * D.
// Throws std::invalid_argument on empty or non-finite input.
KsResult ks_two_sample(const std::vector<double>& sample1,
                       const std::vector<double>& sample2);

}  // namespace vesbo
