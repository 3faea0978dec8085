#pragma once

#include <Eigen/Dense>

#include "vesbo/rng.hpp"

namespace vesbo {

// Random Fourier feature map for the Matern-5/2 kernel:
//   phi_i(x) = sqrt(2 s2 / m) cos(omega_i . x + b_i),
// so that E[phi(x) . phi(x')] = k(x, x').  The spectral density of
// Matern-5/2 is a multivariate Student-t with 5 degrees of freedom, sampled
// as omega_i = z_i * sqrt(5 / u_i) / ell with z_i ~ N(0, I) and a shared
// u_i ~ chi^2_5 per frequency row.
struct MaternFeatureMap {
  Eigen::MatrixXd omega;  // m x d
  Eigen::VectorXd phase;  // m, uniform on [0, 2*pi)
  double scale = 1.0;     // sqrt(2 s2 / m)

  Eigen::Index n_features() const { return omega.rows(); }
  int dim() const { return static_cast<int>(omega.cols()); }

  // Feature vector at a single point (size m).
  Eigen::VectorXd features(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // Feature matrix for query rows (M x m).
  Eigen::MatrixXd features_matrix(
      const Eigen::Ref<const Eigen::MatrixXd>& x) const;
};

MaternFeatureMap make_matern52_features(
    const Eigen::Ref<const Eigen::VectorXd>& lengthscales,
    double signal_variance, Eigen::Index n_features, RngStream& rng);

}  // namespace vesbo
