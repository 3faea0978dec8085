#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "vesbo/gp_model.hpp"
#include "vesbo/rng.hpp"

using namespace vesbo;

namespace {

// Scalar Matern-5/2 reference, written out independently of the library.
double matern52_scalar(double dist, double ell, double s2) {
  const double r = std::abs(dist) / ell;
  const double sr = std::sqrt(5.0) * r;
  return s2 * (1.0 + sr + 5.0 * r * r / 3.0) * std::exp(-sr);
}

ObservationSet make_set(const Eigen::MatrixXd& pts, const Eigen::VectorXd& y) {
  ObservationSet obs(static_cast<int>(pts.cols()));
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    REQUIRE(obs.append(pts.row(i).transpose(), y[i]));
  return obs;
}

KernelSpec iso_kernel(int dim, double ell, double s2, double jitter = 0.0) {
  KernelSpec k;
  k.lengthscales = Eigen::VectorXd::Constant(dim, ell);
  k.signal_variance = s2;
  k.jitter = jitter;
  return k;
}

}  // namespace

TEST_CASE("ObservationSet tracks points, values and the incumbent") {
  ObservationSet obs(2);
  CHECK(obs.size() == 0);
  CHECK(obs.incumbent() == -std::numeric_limits<double>::infinity());

  Eigen::Vector2d a(0.2, 0.8), b(0.5, 0.5);
  CHECK(obs.append(a, 1.5));
  CHECK(obs.append(b, -0.5));
  CHECK(obs.size() == 2);
  CHECK(obs.incumbent() == 1.5);
  CHECK(obs.values()[1] == -0.5);
  CHECK((obs.points().row(0).transpose() - a).norm() == 0.0);

  // Near-duplicates are rejected without modifying the set.
  Eigen::Vector2d a_eps = a + Eigen::Vector2d::Constant(1e-12);
  CHECK_FALSE(obs.append(a_eps, 9.0));
  CHECK(obs.size() == 2);
  CHECK(obs.contains_near(a_eps));
  CHECK_FALSE(obs.contains_near(Eigen::Vector2d(0.9, 0.1)));

  // Shape, range and finiteness guards.
  CHECK_THROWS_AS(obs.append(Eigen::Vector3d::Zero(), 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(obs.append(Eigen::Vector2d(1.5, 0.0), 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(obs.append(Eigen::Vector2d(0.1, 0.1), std::nan("")),
                  std::invalid_argument);
}

TEST_CASE("matern52 matches the scalar reference") {
  const KernelSpec k1 = iso_kernel(1, 1.0, 1.0);
  Eigen::VectorXd x0(1), x1(1);
  x0 << 0.0;
  x1 << 1.0;
  // Unit distance, unit lengthscale: (1 + sqrt5 + 5/3) e^{-sqrt5}.
  CHECK(matern52(x0, x1, k1) ==
        doctest::Approx(0.52399410883182029).epsilon(1e-14));
  // r = 0 returns the signal variance exactly.
  const KernelSpec k2 = iso_kernel(1, 0.3, 2.5);
  CHECK(matern52(x0, x0, k2) == 2.5);
  // Exponential decay at large distance.
  Eigen::VectorXd far(1);
  far << 100.0;
  CHECK(matern52(x0, far, k1) < 1e-60);

  // ARD: each coordinate is scaled by its own lengthscale.
  KernelSpec ard;
  ard.lengthscales = Eigen::Vector2d(0.5, 2.0);
  ard.signal_variance = 1.3;
  Eigen::Vector2d p(0.1, 0.4), q(0.3, 1.2);
  const double r = std::sqrt(std::pow((0.3 - 0.1) / 0.5, 2) +
                             std::pow((1.2 - 0.4) / 2.0, 2));
  CHECK(matern52(p, q, ard) ==
        doctest::Approx(matern52_scalar(r, 1.0, 1.3)).epsilon(1e-12));

  Eigen::Vector3d wrong;
  CHECK_THROWS_AS(matern52(p, wrong, ard), std::invalid_argument);
}

TEST_CASE("matern52_gram is symmetric, positive definite and consistent") {
  RngStream rng(11);
  const int n = 12, d = 3;
  Eigen::MatrixXd pts(n, d);
  for (int i = 0; i < n; ++i) pts.row(i) = rng.uniform_vector(d).transpose();
  const KernelSpec k = iso_kernel(d, 0.4, 1.7);

  const Eigen::MatrixXd gram = matern52_gram(pts, pts, k);
  CHECK((gram - gram.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      CHECK(gram(i, j) == doctest::Approx(matern52(
                              pts.row(i).transpose(),
                              pts.row(j).transpose(), k)).epsilon(1e-12));

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-8);

  // Rectangular cross-Gram.
  Eigen::MatrixXd other(5, d);
  for (int i = 0; i < 5; ++i) other.row(i) = rng.uniform_vector(d).transpose();
  const Eigen::MatrixXd cross = matern52_gram(pts, other, k);
  CHECK(cross.rows() == n);
  CHECK(cross.cols() == 5);
  CHECK(cross(3, 2) == doctest::Approx(matern52(pts.row(3).transpose(),
                                                other.row(2).transpose(), k))
                           .epsilon(1e-12));
}

TEST_CASE("posterior matches a hand-solved 2x2 system in 1-d") {
  Eigen::MatrixXd pts(2, 1);
  pts << 0.0, 1.0;
  Eigen::VectorXd y(2);
  y << 1.0, 2.0;
  const GpPosterior gp(make_set(pts, y), iso_kernel(1, 1.0, 1.0));

  const double k01 = matern52_scalar(1.0, 1.0, 1.0);
  const double det = 1.0 - k01 * k01;
  // Closed-form alpha = K^{-1} y for the 2x2 system.
  const double a0 = (y[0] - k01 * y[1]) / det;
  const double a1 = (y[1] - k01 * y[0]) / det;

  Eigen::MatrixXd query(1, 1);
  query << 0.25;
  const auto [mean, var] = posterior_mean_var(gp, query);
  const double kq0 = matern52_scalar(0.25, 1.0, 1.0);
  const double kq1 = matern52_scalar(0.75, 1.0, 1.0);
  CHECK(mean[0] == doctest::Approx(kq0 * a0 + kq1 * a1).epsilon(1e-12));

  // var = k(x,x) - k_q^T K^{-1} k_q with the same closed-form inverse.
  const double q0 = (kq0 - k01 * kq1) / det;
  const double q1 = (kq1 - k01 * kq0) / det;
  CHECK(var[0] ==
        doctest::Approx(1.0 - (kq0 * q0 + kq1 * q1)).epsilon(1e-10));
}

TEST_CASE("noiseless posterior interpolates the observations") {
  RngStream rng(21);
  const int n = 10, d = 2;
  const Eigen::MatrixXd pts = sobol_points(n, d);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = 2.0 * rng.normal();

  const GpPosterior gp(make_set(pts, y), iso_kernel(d, 0.4, 1.5));
  const auto [mean, var] = posterior_mean_var(gp, pts);
  for (int i = 0; i < n; ++i) {
    CHECK(std::abs(mean[i] - y[i]) <= 1e-6);
    CHECK(var[i] >= 0.0);
    CHECK(var[i] <= 1e-8);
  }

  // The stored factor reconstructs K + jitter I.
  const Eigen::MatrixXd k = matern52_gram(pts, pts, gp.kernel());
  const Eigen::MatrixXd recon =
      gp.chol_factor() * gp.chol_factor().transpose();
  CHECK((recon - k).norm() <= 1e-8 * k.norm());
}

TEST_CASE("posterior_mean_cov is symmetric, PSD and matches the diagonal") {
  RngStream rng(31);
  const int n = 8, d = 2, m = 6;
  const Eigen::MatrixXd pts = sobol_points(n, d);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = rng.normal();
  const GpPosterior gp(make_set(pts, y), iso_kernel(d, 0.5, 1.0, 1e-10));

  Eigen::MatrixXd queries(m, d);
  for (int i = 0; i < m; ++i)
    queries.row(i) = rng.uniform_vector(d).transpose();

  const auto [mean, cov] = posterior_mean_cov(gp, queries);
  CHECK((cov - cov.transpose()).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-8);

  const auto [mean2, var2] = posterior_mean_var(gp, queries);
  CHECK((mean - mean2).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((cov.diagonal() - var2).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("prior mode: zero mean and full prior variance") {
  const GpPosterior gp(ObservationSet(2), iso_kernel(2, 0.5, 1.8));
  Eigen::MatrixXd queries(3, 2);
  queries << 0.1, 0.2, 0.5, 0.5, 0.9, 0.3;
  const auto [mean, var] = posterior_mean_var(gp, queries);
  for (int i = 0; i < 3; ++i) {
    CHECK(mean[i] == 0.0);
    CHECK(var[i] == doctest::Approx(1.8).epsilon(1e-14));
  }
}

TEST_CASE("adding an observation never increases posterior variance") {
  RngStream rng(41);
  const int d = 2;
  const Eigen::MatrixXd pts = sobol_points(9, d);
  Eigen::VectorXd y(9);
  for (int i = 0; i < 9; ++i) y[i] = rng.normal();

  const KernelSpec kernel = iso_kernel(d, 0.45, 1.2);
  const GpPosterior small(make_set(pts.topRows(8), y.head(8)), kernel);
  const GpPosterior big(make_set(pts, y), kernel);

  Eigen::MatrixXd queries(40, d);
  for (int i = 0; i < 40; ++i)
    queries.row(i) = rng.uniform_vector(d).transpose();
  const auto [m1, v1] = posterior_mean_var(small, queries);
  const auto [m2, v2] = posterior_mean_var(big, queries);
  for (int i = 0; i < 40; ++i) CHECK(v2[i] <= v1[i] + 1e-8);
}

TEST_CASE("posterior de-standardizes mean and variance") {
  Eigen::MatrixXd pts(2, 1);
  pts << 0.1, 0.9;
  Eigen::VectorXd y(2);
  y << 10.0, 30.0;  // mean 20, scale e.g. 10
  const GpPosterior gp(make_set(pts, y), iso_kernel(1, 0.5, 1.0), 20.0, 10.0);
  CHECK(gp.standardized_values()[0] == doctest::Approx(-1.0));
  CHECK(gp.standardized_values()[1] == doctest::Approx(1.0));

  const auto [mean, var] = posterior_mean_var(gp, pts);
  CHECK(mean[0] == doctest::Approx(10.0).epsilon(1e-8));
  CHECK(mean[1] == doctest::Approx(30.0).epsilon(1e-8));
  // Far away, the mean reverts to y_mean and the variance to s2 * scale^2.
  Eigen::MatrixXd mid(1, 1);
  mid << 0.5;
  const auto [mmid, vmid] = posterior_mean_var(gp, mid);
  CHECK(vmid[0] <= 1.0 * 100.0 + 1e-9);
}

TEST_CASE("log marginal likelihood value matches a direct dense solve") {
  RngStream rng(51);
  const int n = 7, d = 2;
  const Eigen::MatrixXd x = sobol_points(n, d);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = rng.normal();

  const Eigen::VectorXd log_ell = Eigen::Vector2d(std::log(0.4),
                                                  std::log(0.7));
  const double log_s2 = std::log(1.6);
  const double jitter_factor = 1e-8;
  const double lml =
      log_marginal_likelihood(x, y, log_ell, log_s2, jitter_factor);

  KernelSpec k;
  k.lengthscales = log_ell.array().exp().matrix();
  k.signal_variance = std::exp(log_s2);
  Eigen::MatrixXd gram = matern52_gram(x, x, k);
  gram.diagonal().array() += jitter_factor * k.signal_variance;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
  const double direct = -0.5 * y.dot(lu.solve(y)) -
                        0.5 * std::log(lu.determinant()) -
                        0.5 * n * std::log(2.0 * M_PI);
  CHECK(lml == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("log marginal likelihood gradient matches finite differences") {
  RngStream rng(61);
  const int n = 9, d = 2;
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd x(n, d);
    for (int i = 0; i < n; ++i) x.row(i) = rng.uniform_vector(d).transpose();
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = rng.normal();
    Eigen::VectorXd log_ell(d);
    for (int j = 0; j < d; ++j) log_ell[j] = std::log(0.2 + rng.uniform());
    const double log_s2 = std::log(0.5 + 1.5 * rng.uniform());

    Eigen::VectorXd grad;
    log_marginal_likelihood(x, y, log_ell, log_s2, 1e-8, &grad);
    REQUIRE(grad.size() == d + 1);

    for (int j = 0; j <= d; ++j) {
      Eigen::VectorXd ell_p = log_ell, ell_m = log_ell;
      double s2_p = log_s2, s2_m = log_s2;
      if (j < d) {
        ell_p[j] += h;
        ell_m[j] -= h;
      } else {
        s2_p += h;
        s2_m -= h;
      }
      const double fd =
          (log_marginal_likelihood(x, y, ell_p, s2_p, 1e-8) -
           log_marginal_likelihood(x, y, ell_m, s2_m, 1e-8)) /
          (2.0 * h);
      CHECK(std::abs(grad[j] - fd) <=
            1e-4 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("fit_map is reproducible and interpolates") {
  RngStream rng(71);
  const int n = 12, d = 2;
  const Eigen::MatrixXd pts = sobol_points(n, d);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i)
    y[i] = std::sin(6.0 * pts(i, 0)) + 0.5 * std::cos(4.0 * pts(i, 1));
  const ObservationSet obs = make_set(pts, y);

  FitConfig cfg;
  cfg.seed = 7;
  const GpPosterior gp1 = fit_map(obs, cfg);
  const GpPosterior gp2 = fit_map(obs, cfg);
  CHECK(gp1.kernel().lengthscales == gp2.kernel().lengthscales);
  CHECK(gp1.kernel().signal_variance == gp2.kernel().signal_variance);
  CHECK(gp1.y_mean() == gp2.y_mean());

  const auto [mean, var] = posterior_mean_var(gp1, pts);
  for (int i = 0; i < n; ++i)
    CHECK(std::abs(mean[i] - y[i]) <= 1e-5 * std::max(1.0, std::abs(y[i])));
}

TEST_CASE("fit_map handles two points and constant values") {
  Eigen::MatrixXd pts(2, 1);
  pts << 0.2, 0.8;
  Eigen::VectorXd y(2);
  y << -1.0, 3.0;
  FitConfig cfg;
  const GpPosterior gp = fit_map(make_set(pts, y), cfg);
  const auto [mean, var] = posterior_mean_var(gp, pts);
  CHECK(mean[0] == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(mean[1] == doctest::Approx(3.0).epsilon(1e-6));

  // Constant values: the standardization guard must not divide by ~0.
  Eigen::VectorXd flat = Eigen::VectorXd::Constant(2, 4.2);
  const GpPosterior gp_flat = fit_map(make_set(pts, flat), cfg);
  const auto [fm, fv] = posterior_mean_var(gp_flat, pts);
  CHECK(fm[0] == doctest::Approx(4.2).epsilon(1e-8));
  CHECK(fm[1] == doctest::Approx(4.2).epsilon(1e-8));

  ObservationSet single(1);
  Eigen::VectorXd one(1);
  one << 0.5;
  single.append(one, 1.0);
  CHECK_THROWS(fit_map(single, cfg));
}

TEST_CASE("fit_map recovers the generating lengthscale to a factor of 3") {
  // Self-consistency: observe a known smooth function at 20 points and
  // check the fitted lengthscales stay in a plausible band, with the
  // median over seeds inside a factor of 3 of the generating scale.
  const int d = 2, n = 20, n_seeds = 20;
  std::vector<double> fitted;
  for (int seed = 0; seed < n_seeds; ++seed) {
    RngStream rng = RngStream::keyed(1000, seed);
    // Draw a smooth random function as a short cosine expansion with
    // frequencies matched to lengthscale 0.25.
    const Eigen::MatrixXd w = rng.normal_matrix(32, d) / 0.25;
    const Eigen::VectorXd phase = rng.uniform_vector(32) * 2.0 * M_PI;
    const Eigen::MatrixXd pts = sobol_points(n, d);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd proj =
          w * pts.row(i).transpose() + phase;
      y[i] = std::sqrt(2.0 / 32.0) * proj.array().cos().sum();
    }
    FitConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(seed);
    const GpPosterior gp = fit_map(make_set(pts, y), cfg);
    fitted.push_back(gp.kernel().lengthscales.minCoeff());
    fitted.push_back(gp.kernel().lengthscales.maxCoeff());
  }
  std::sort(fitted.begin(), fitted.end());
  const double median = fitted[fitted.size() / 2];
  CHECK(median >= 0.25 / 3.0);
  CHECK(median <= 0.25 * 3.0);
}
