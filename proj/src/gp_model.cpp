#include "vesbo/gp_model.hpp"

#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "vesbo/rng.hpp"

namespace vesbo {

namespace {

constexpr double kSqrt5 = 2.23606797749978969641;
constexpr double kLog2Pi = 1.83787706640934548356;

// Squared scaled distances ||(a_i - b_j) / ell||^2, clamped at zero to
// absorb cancellation noise on near-coincident points.
Eigen::MatrixXd scaled_sq_dist(const Eigen::Ref<const Eigen::MatrixXd>& a,
                               const Eigen::Ref<const Eigen::MatrixXd>& b,
                               const Eigen::VectorXd& lengthscales) {
  const Eigen::VectorXd inv_ell = lengthscales.cwiseInverse();
  const Eigen::MatrixXd as = a * inv_ell.asDiagonal();
  const Eigen::MatrixXd bs = b * inv_ell.asDiagonal();
  Eigen::MatrixXd d2 = -2.0 * as * bs.transpose();
  d2.colwise() += as.rowwise().squaredNorm();
  d2.rowwise() += bs.rowwise().squaredNorm().transpose();
  return d2.cwiseMax(0.0);
}

void check_kernel(const KernelSpec& kernel, Eigen::Index dim) {
  if (kernel.lengthscales.size() != dim)
    throw std::invalid_argument("kernel: lengthscale dimension mismatch");
  if (!(kernel.lengthscales.array() > 0.0).all() ||
      !kernel.lengthscales.allFinite())
    throw std::invalid_argument("kernel: lengthscales must be positive");
  if (!(kernel.signal_variance > 0.0) || !std::isfinite(kernel.signal_variance))
    throw std::invalid_argument("kernel: signal variance must be positive");
  if (kernel.jitter < 0.0 || !std::isfinite(kernel.jitter))
    throw std::invalid_argument("kernel: jitter must be non-negative");
}

}  // namespace

ObservationSet::ObservationSet(int dim) : dim_(dim) {
  if (dim < 1) throw std::invalid_argument("ObservationSet: dim must be >= 1");
  points_.resize(64, dim_);
  values_.resize(64);
}

double ObservationSet::incumbent() const {
  if (n_ == 0) return -std::numeric_limits<double>::infinity();
  return values_.head(n_).maxCoeff();
}

bool ObservationSet::contains_near(const Eigen::Ref<const Eigen::VectorXd>& x,
                                   double tol) const {
  if (x.size() != dim_)
    throw std::invalid_argument("ObservationSet: point dimension mismatch");
  for (Eigen::Index i = 0; i < n_; ++i)
    if ((points_.row(i).transpose() - x).norm() <= tol) return true;
  return false;
}

bool ObservationSet::append(const Eigen::Ref<const Eigen::VectorXd>& x,
                            double y, double tol) {
  if (x.size() != dim_)
    throw std::invalid_argument("ObservationSet: point dimension mismatch");
  if (!x.allFinite() || !std::isfinite(y))
    throw std::invalid_argument("ObservationSet: non-finite observation");
  if ((x.array() < 0.0).any() || (x.array() > 1.0).any())
    throw std::invalid_argument("ObservationSet: point outside unit cube");
  if (contains_near(x, tol)) return false;
  if (n_ == points_.rows()) {
    points_.conservativeResize(2 * n_, Eigen::NoChange);
    values_.conservativeResize(2 * n_);
  }
  points_.row(n_) = x.transpose();
  values_[n_] = y;
  ++n_;
  return true;
}

double matern52(const Eigen::Ref<const Eigen::VectorXd>& x,
                const Eigen::Ref<const Eigen::VectorXd>& x2,
                const KernelSpec& kernel) {
  check_kernel(kernel, x.size());
  if (x2.size() != x.size())
    throw std::invalid_argument("matern52: point dimension mismatch");
  const double r2 =
      ((x - x2).array() / kernel.lengthscales.array()).square().sum();
  const double r = std::sqrt(r2);
  return kernel.signal_variance * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r2) *
         std::exp(-kSqrt5 * r);
}

Eigen::MatrixXd matern52_gram(const Eigen::Ref<const Eigen::MatrixXd>& a,
                              const Eigen::Ref<const Eigen::MatrixXd>& b,
                              const KernelSpec& kernel) {
  if (a.cols() != b.cols())
    throw std::invalid_argument("matern52_gram: dimension mismatch");
  check_kernel(kernel, a.cols());
  const Eigen::MatrixXd r2 = scaled_sq_dist(a, b, kernel.lengthscales);
  const Eigen::ArrayXXd r = r2.array().sqrt();
  return (kernel.signal_variance * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r2.array()) *
          (-kSqrt5 * r).exp())
      .matrix();
}

GpPosterior::GpPosterior(ObservationSet observations, KernelSpec kernel,
                         double y_mean, double y_scale)
    : observations_(std::move(observations)),
      kernel_(std::move(kernel)),
      y_mean_(y_mean),
      y_scale_(y_scale) {
  check_kernel(kernel_, observations_.dim());
  if (!(y_scale_ > 0.0))
    throw std::invalid_argument("GpPosterior: y_scale must be positive");
  const Eigen::Index n = observations_.size();
  y_std_ = ((observations_.values().array() - y_mean_) / y_scale_).matrix();
  if (n == 0) return;  // prior mode

  Eigen::MatrixXd k = matern52_gram(observations_.points(),
                                    observations_.points(), kernel_);
  k.diagonal().array() += kernel_.jitter;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("GpPosterior: Cholesky factorization failed");
  chol_ = llt.matrixL();
  alpha_ = llt.solve(y_std_);
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> posterior_mean_cov(
    const GpPosterior& gp, const Eigen::Ref<const Eigen::MatrixXd>& queries) {
  if (queries.cols() != gp.dim())
    throw std::invalid_argument("posterior_mean_cov: dimension mismatch");
  const Eigen::Index m = queries.rows();
  const Eigen::Index n = gp.observations().size();
  Eigen::MatrixXd k_qq = matern52_gram(queries, queries, gp.kernel());
  const double s = gp.y_scale();

  if (n == 0) {
    return {Eigen::VectorXd::Constant(m, gp.y_mean()), (s * s) * k_qq};
  }
  const Eigen::MatrixXd k_xq =
      matern52_gram(gp.observations().points(), queries, gp.kernel());
  Eigen::VectorXd mean =
      (gp.y_mean() + (s * (k_xq.transpose() * gp.alpha()).array())).matrix();
  const Eigen::MatrixXd v =
      gp.chol_factor().triangularView<Eigen::Lower>().solve(k_xq);
  Eigen::MatrixXd cov = (s * s) * (k_qq - v.transpose() * v);
  cov = (0.5 * (cov + cov.transpose())).eval();
  cov.diagonal() = cov.diagonal().cwiseMax(0.0);
  return {std::move(mean), std::move(cov)};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> posterior_mean_var(
    const GpPosterior& gp, const Eigen::Ref<const Eigen::MatrixXd>& queries) {
  if (queries.cols() != gp.dim())
    throw std::invalid_argument("posterior_mean_var: dimension mismatch");
  const Eigen::Index m = queries.rows();
  const Eigen::Index n = gp.observations().size();
  const double s = gp.y_scale();
  const double prior_var = gp.kernel().signal_variance;

  if (n == 0) {
    return {Eigen::VectorXd::Constant(m, gp.y_mean()),
            Eigen::VectorXd::Constant(m, s * s * prior_var)};
  }
  const Eigen::MatrixXd k_xq =
      matern52_gram(gp.observations().points(), queries, gp.kernel());
  Eigen::VectorXd mean =
      (gp.y_mean() + (s * (k_xq.transpose() * gp.alpha()).array())).matrix();
  const Eigen::MatrixXd v =
      gp.chol_factor().triangularView<Eigen::Lower>().solve(k_xq);
  Eigen::VectorXd var =
      ((s * s) *
       (prior_var - v.colwise().squaredNorm().transpose().array()).max(0.0))
          .matrix();
  return {std::move(mean), std::move(var)};
}

double log_marginal_likelihood(
    const Eigen::Ref<const Eigen::MatrixXd>& x,
    const Eigen::Ref<const Eigen::VectorXd>& y,
    const Eigen::Ref<const Eigen::VectorXd>& log_lengthscales,
    double log_signal_variance, double jitter_factor, Eigen::VectorXd* grad) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (y.size() != n)
    throw std::invalid_argument("log_marginal_likelihood: size mismatch");
  if (log_lengthscales.size() != d)
    throw std::invalid_argument("log_marginal_likelihood: size mismatch");
  if (n < 1)
    throw std::invalid_argument("log_marginal_likelihood: empty data");

  const Eigen::VectorXd ell = log_lengthscales.array().exp().matrix();
  const double s2 = std::exp(log_signal_variance);
  if (!ell.allFinite() || !std::isfinite(s2))
    throw std::runtime_error("log_marginal_likelihood: parameter overflow");

  const Eigen::MatrixXd r2 = scaled_sq_dist(x, x, ell);
  const Eigen::ArrayXXd r = r2.array().sqrt();
  const Eigen::ArrayXXd decay = (-kSqrt5 * r).exp();
  Eigen::MatrixXd ky =
      (s2 * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r2.array()) * decay).matrix();
  ky.diagonal().array() += s2 * jitter_factor;

  Eigen::LLT<Eigen::MatrixXd> llt(ky);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("log_marginal_likelihood: factorization failed");
  const Eigen::VectorXd alpha = llt.solve(y);
  const double log_det =
      2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double lml = -0.5 * y.dot(alpha) - 0.5 * log_det -
                     0.5 * static_cast<double>(n) * kLog2Pi;

  if (grad != nullptr) {
    grad->resize(d + 1);
    const Eigen::MatrixXd k_inv =
        llt.solve(Eigen::MatrixXd::Identity(n, n));
    // dL/dtheta = tr((alpha alpha^T - K^-1) dK/dtheta) / 2.
    const Eigen::MatrixXd a = alpha * alpha.transpose() - k_inv;
    const Eigen::ArrayXXd common = (5.0 / 3.0) * s2 * (1.0 + kSqrt5 * r) * decay;
    for (Eigen::Index j = 0; j < d; ++j) {
      // dK/d(log ell_j) = common * (x_j - x'_j)^2 / ell_j^2.
      const Eigen::ArrayXd cj = x.col(j).array() / ell[j];
      const Eigen::ArrayXXd dj =
          (cj.replicate(1, n) - cj.transpose().replicate(n, 1)).square();
      (*grad)[j] = 0.5 * (a.array() * common * dj).sum();
    }
    // The jitter scales with s2, so dKy/d(log s2) = Ky exactly and the
    // trace term collapses: tr(A Ky) = y . alpha - n.
    (*grad)[d] = 0.5 * (y.dot(alpha) - static_cast<double>(n));
  }
  return lml;
}

namespace {

// Minimal L-BFGS (two-loop recursion, Armijo backtracking) for the MAP
// objective.  The callback returns the objective value and fills the
// gradient; non-finite values reject the trial step.
struct LbfgsOutcome {
  Eigen::VectorXd x;
  double f = std::numeric_limits<double>::infinity();
};

LbfgsOutcome lbfgs_minimize(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& fn,
    Eigen::VectorXd x0, int max_iters, double grad_tol) {
  const Eigen::Index dim = x0.size();
  constexpr int kHistory = 10;
  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  Eigen::VectorXd x = std::move(x0);
  Eigen::VectorXd g(dim);
  double f = fn(x, g);
  if (!std::isfinite(f)) return {x, std::numeric_limits<double>::infinity()};

  for (int iter = 0; iter < max_iters; ++iter) {
    if (g.norm() <= grad_tol) break;

    Eigen::VectorXd q = g;
    std::vector<double> alpha_coef(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      alpha_coef[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha_coef[i] * y_hist[i];
    }
    if (!s_hist.empty()) {
      const auto& s_last = s_hist.back();
      const auto& y_last = y_hist.back();
      q *= s_last.dot(y_last) / y_last.squaredNorm();
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += s_hist[i] * (alpha_coef[i] - beta);
    }
    Eigen::VectorXd dir = -q;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {  // not a descent direction; restart on -g
      dir = -g;
      slope = -g.squaredNorm();
    }

    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd x_new(dim), g_new(dim);
    double f_new = 0.0;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = x + step * dir;
      f_new = fn(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    Eigen::VectorXd s_new = x_new - x;
    Eigen::VectorXd y_new = g_new - g;
    const double sy = s_new.dot(y_new);
    if (sy > 1e-10 * s_new.norm() * y_new.norm()) {
      s_hist.push_back(std::move(s_new));
      y_hist.push_back(std::move(y_new));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > kHistory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    x = std::move(x_new);
    g = g_new;
    f = f_new;
  }
  return {std::move(x), f};
}

}  // namespace

GpPosterior fit_map(const ObservationSet& observations,
                    const FitConfig& config) {
  const Eigen::Index n = observations.size();
  if (n < 2)
    throw std::invalid_argument("fit_map: need at least two observations");
  const int d = observations.dim();

  // Standardize targets; a flat set of values keeps unit scale.
  const double y_mean = observations.values().mean();
  double y_scale = std::sqrt(
      (observations.values().array() - y_mean).square().sum() /
      static_cast<double>(n));
  if (!(y_scale > 1e-12)) y_scale = 1.0;
  const Eigen::VectorXd y_std =
      ((observations.values().array() - y_mean) / y_scale).matrix();
  const Eigen::MatrixXd x = observations.points();

  Eigen::VectorXd prior_mean(d + 1), prior_std(d + 1);
  prior_mean.head(d).setConstant(std::log(
      config.lengthscale_median_factor * std::sqrt(static_cast<double>(d))));
  prior_mean[d] = std::log(config.signal_median);
  prior_std.head(d).setConstant(config.lengthscale_log_std);
  prior_std[d] = config.signal_log_std;

  auto objective = [&](const Eigen::VectorXd& theta,
                       Eigen::VectorXd& grad) -> double {
    double lml;
    Eigen::VectorXd lml_grad;
    try {
      lml = log_marginal_likelihood(x, y_std, theta.head(d), theta[d],
                                    config.jitter_factor, &lml_grad);
    } catch (const std::runtime_error&) {
      grad.setZero(d + 1);
      return std::numeric_limits<double>::infinity();
    }
    // Gaussian penalty on the log-parameters (log-normal hyperpriors).
    const Eigen::ArrayXd zscore =
        (theta - prior_mean).array() / prior_std.array();
    const double penalty = 0.5 * zscore.square().sum();
    grad = -lml_grad + (zscore / prior_std.array()).matrix();
    return -lml + penalty;
  };

  RngStream rng = RngStream::keyed(config.seed, stream_purpose::kGpFit);
  LbfgsOutcome best;
  for (int start = 0; start < config.n_starts; ++start) {
    Eigen::VectorXd theta0 = prior_mean;
    if (start > 0)
      theta0 += (prior_std.array() * rng.normal_vector(d + 1).array()).matrix();
    LbfgsOutcome outcome = lbfgs_minimize(objective, std::move(theta0),
                                          config.max_iters, config.grad_tol);
    if (outcome.f < best.f) best = std::move(outcome);
  }
  if (!std::isfinite(best.f))
    throw std::runtime_error("fit_map: no start produced a usable fit");

  KernelSpec kernel;
  kernel.lengthscales = best.x.head(d).array().exp().matrix();
  kernel.signal_variance = std::exp(best.x[d]);

  // Escalate the relative jitter tenfold until the factorization succeeds.
  for (double factor = config.jitter_factor;
       factor <= config.jitter_max_factor * (1.0 + 1e-12); factor *= 10.0) {
    kernel.jitter = factor * kernel.signal_variance;
    try {
      return GpPosterior(observations, kernel, y_mean, y_scale);
    } catch (const std::runtime_error&) {
      // try the next jitter level
    }
  }
  throw std::runtime_error(
      "fit_map: Gram matrix not factorizable at maximum jitter");
}

}  // namespace vesbo
