#pragma once

#include <cstdint>
#include <utility>

#include <Eigen/Dense>

namespace vesbo {

// Growing set of (x, y) observations on the unit cube [0, 1]^d.
// Points are kept pairwise distinct: appends that land within `tol` of an
// existing point are rejected so downstream Gram matrices stay well posed.
class ObservationSet {
 public:
  explicit ObservationSet(int dim);

  int dim() const { return dim_; }
  Eigen::Index size() const { return n_; }

  // Rows 0..size()-1 are valid; the matrix over-allocates for amortized
  // growth, so always go through these accessors.
  Eigen::Ref<const Eigen::MatrixXd> points() const {
    return points_.topRows(n_);
  }
  Eigen::Ref<const Eigen::VectorXd> values() const { return values_.head(n_); }

  // Largest observed value; -infinity when empty.
  double incumbent() const;

  bool contains_near(const Eigen::Ref<const Eigen::VectorXd>& x,
                     double tol = 1e-9) const;

  // Returns false (and leaves the set unchanged) if x duplicates an
  // existing point within `tol`.  Throws std::invalid_argument on shape
  // mismatch, coordinates outside [0, 1] or non-finite values.
  bool append(const Eigen::Ref<const Eigen::VectorXd>& x, double y,
              double tol = 1e-9);

 private:
  int dim_;
  Eigen::Index n_ = 0;
  Eigen::MatrixXd points_;
  Eigen::VectorXd values_;
};

// Matern-5/2 kernel with per-dimension (ARD) lengthscales:
//   k(x, x') = s2 (1 + sqrt(5) r + 5 r^2 / 3) exp(-sqrt(5) r),
//   r^2 = sum_j ((x_j - x'_j) / ell_j)^2.
struct KernelSpec {
  Eigen::VectorXd lengthscales;
  double signal_variance = 1.0;
  double jitter = 0.0;  // added to the Gram diagonal at factorization
};

double matern52(const Eigen::Ref<const Eigen::VectorXd>& x,
                const Eigen::Ref<const Eigen::VectorXd>& x2,
                const KernelSpec& kernel);

// Cross-Gram matrix k(A_i, B_j), shape A.rows() x B.rows().
Eigen::MatrixXd matern52_gram(const Eigen::Ref<const Eigen::MatrixXd>& a,
                              const Eigen::Ref<const Eigen::MatrixXd>& b,
                              const KernelSpec& kernel);

// Noiseless GP posterior over observations standardized to zero mean and
// unit scale internally; all public quantities are on the raw y scale.
// Construction factorizes K + jitter*I once (Cholesky); queries reuse it.
class GpPosterior {
 public:
  GpPosterior(ObservationSet observations, KernelSpec kernel,
              double y_mean = 0.0, double y_scale = 1.0);

  const ObservationSet& observations() const { return observations_; }
  const KernelSpec& kernel() const { return kernel_; }
  int dim() const { return observations_.dim(); }

  double y_mean() const { return y_mean_; }
  double y_scale() const { return y_scale_; }
  double incumbent() const { return observations_.incumbent(); }

  // Lower Cholesky factor of K + jitter*I and K^{-1} y_std.
  const Eigen::MatrixXd& chol_factor() const { return chol_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }

  // Standardized observed values (y - y_mean) / y_scale.
  const Eigen::VectorXd& standardized_values() const { return y_std_; }

 private:
  ObservationSet observations_;
  KernelSpec kernel_;
  double y_mean_;
  double y_scale_;
  Eigen::VectorXd y_std_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd alpha_;
};

// Posterior mean vector and full covariance matrix at query rows (M x d).
// The covariance is exactly symmetric with non-negative diagonal.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> posterior_mean_cov(
    const GpPosterior& gp, const Eigen::Ref<const Eigen::MatrixXd>& queries);

// Diagonal-only fast path: mean and pointwise variance at query rows.
std::pair<Eigen::VectorXd, Eigen::VectorXd> posterior_mean_var(
    const GpPosterior& gp, const Eigen::Ref<const Eigen::MatrixXd>& queries);

// Log marginal likelihood of standardized values y under the Matern-5/2
// kernel with parameters given in log space; the diagonal jitter is tied
// to the signal variance as jitter_factor * s2.  When `grad` is non-null
// it receives d/d(log ell_1..d) followed by d/d(log s2) (size d + 1).
double log_marginal_likelihood(const Eigen::Ref<const Eigen::MatrixXd>& x,
                               const Eigen::Ref<const Eigen::VectorXd>& y,
                               const Eigen::Ref<const Eigen::VectorXd>&
                                   log_lengthscales,
                               double log_signal_variance,
                               double jitter_factor,
                               Eigen::VectorXd* grad = nullptr);

struct FitConfig {
  std::uint64_t seed = 0;
  int n_starts = 8;       // prior median start + (n_starts - 1) prior draws
  int max_iters = 100;    // L-BFGS iteration cap per start
  double grad_tol = 1e-5;

  // Log-normal hyperpriors (medians and log-standard-deviations).  The
  // lengthscale median scales with dimension as factor * sqrt(d).
  double lengthscale_median_factor = 0.5;
  double lengthscale_log_std = 0.7;
  double signal_median = 1.0;
  double signal_log_std = 1.0;

  // Relative jitter: factorization starts at jitter_factor * s2 and
  // escalates tenfold up to jitter_max_factor * s2 before giving up.
  double jitter_factor = 1e-8;
  double jitter_max_factor = 1e-4;
};

// MAP fit of kernel hyperparameters by multi-start L-BFGS on the penalized
// log marginal likelihood.  Requires at least two observations.  Throws
// std::runtime_error if the final Gram matrix cannot be factorized even at
// the maximum jitter.
GpPosterior fit_map(const ObservationSet& observations,
                    const FitConfig& config);

}  // namespace vesbo
