#include "vesbo/posterior_paths.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace vesbo {

Eigen::VectorXd MaternFeatureMap::features(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return (scale * ((omega * x + phase).array().cos())).matrix();
}

Eigen::MatrixXd MaternFeatureMap::features_matrix(
    const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  return (scale * (((x * omega.transpose()).rowwise() + phase.transpose())
                       .array()
                       .cos()))
      .matrix();
}

MaternFeatureMap make_matern52_features(
    const Eigen::Ref<const Eigen::VectorXd>& lengthscales,
    double signal_variance, Eigen::Index n_features, RngStream& rng) {
  if (n_features < 1)
    throw std::invalid_argument("make_matern52_features: need features");
  const Eigen::Index d = lengthscales.size();
  MaternFeatureMap map;
  map.omega.resize(n_features, d);
  map.phase.resize(n_features);
  for (Eigen::Index i = 0; i < n_features; ++i) {
    // One chi^2_5 draw per frequency row makes the row a multivariate-t
    // sample with 5 degrees of freedom -- the Matern-5/2 spectral law.
    const double u = rng.chi_squared(5);
    const double t_scale = std::sqrt(5.0 / u);
    map.omega.row(i) =
        (rng.normal_vector(d).array() * t_scale / lengthscales.array())
            .transpose();
  }
  map.phase = 2.0 * M_PI * rng.uniform_vector(n_features);
  map.scale = std::sqrt(2.0 * signal_variance /
                        static_cast<double>(n_features));
  return map;
}

bool operator==(const MaxSearchConfig& a, const MaxSearchConfig& b) {
  return a.n_candidates == b.n_candidates && a.refine_steps == b.refine_steps &&
         a.seed == b.seed && a.include_training == b.include_training &&
         a.extra_candidates.rows() == b.extra_candidates.rows() &&
         a.extra_candidates.cols() == b.extra_candidates.cols() &&
         a.extra_candidates == b.extra_candidates;
}

PathBundle::PathBundle(const GpPosterior& gp, int n_paths, int n_features,
                       std::uint64_t seed)
    : gp_(gp), dim_(gp.dim()), cache_(std::make_unique<YStarCache>()) {
  if (n_paths < 1 || n_features < 1)
    throw std::invalid_argument("PathBundle: need paths and features");

  RngStream rng = RngStream::keyed(seed, stream_purpose::kPaths);
  feature_map_ = make_matern52_features(
      gp_.kernel().lengthscales, gp_.kernel().signal_variance, n_features,
      rng);
  weights_ = rng.normal_matrix(n_features, n_paths);

  const Eigen::Index n = gp_.observations().size();
  if (n > 0) {
    phi_train_ = feature_map_.features_matrix(gp_.observations().points());
    // Residual of each prior path at the data, mapped through K^{-1}:
    // adding k_t(x)^T update_coef_ pins every path to the observations.
    const Eigen::MatrixXd resid =
        gp_.standardized_values().replicate(1, n_paths) -
        phi_train_ * weights_;
    const auto& chol = gp_.chol_factor();
    update_coef_ = chol.transpose().triangularView<Eigen::Upper>().solve(
        chol.triangularView<Eigen::Lower>().solve(resid));
  }
}

Eigen::VectorXd PathBundle::evaluate(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim_ || !x.allFinite())
    throw std::invalid_argument("PathBundle: bad query point");
  Eigen::VectorXd vals = weights_.transpose() * feature_map_.features(x);
  if (gp_.observations().size() > 0) {
    const Eigen::MatrixXd kx = matern52_gram(
        gp_.observations().points(), x.transpose(), gp_.kernel());
    vals += update_coef_.transpose() * kx.col(0);
  }
  return (gp_.y_mean() + gp_.y_scale() * vals.array()).matrix();
}

Eigen::MatrixXd PathBundle::evaluate_matrix(
    const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  if (x.cols() != dim_ || !x.allFinite())
    throw std::invalid_argument("PathBundle: bad query matrix");
  Eigen::MatrixXd vals = feature_map_.features_matrix(x) * weights_;
  if (gp_.observations().size() > 0) {
    vals += matern52_gram(x, gp_.observations().points(), gp_.kernel()) *
            update_coef_;
  }
  return (gp_.y_mean() + gp_.y_scale() * vals.array()).matrix();
}

double PathBundle::evaluate_one(const Eigen::Ref<const Eigen::VectorXd>& x,
                                int path) const {
  if (path < 0 || path >= n_paths())
    throw std::invalid_argument("PathBundle: path index out of range");
  double val = feature_map_.features(x).dot(weights_.col(path));
  if (gp_.observations().size() > 0) {
    const Eigen::MatrixXd kx = matern52_gram(
        gp_.observations().points(), x.transpose(), gp_.kernel());
    val += update_coef_.col(path).dot(kx.col(0));
  }
  return gp_.y_mean() + gp_.y_scale() * val;
}

Eigen::VectorXd PathBundle::y_star(const MaxSearchConfig& config) const {
  std::lock_guard<std::mutex> lock(cache_->mutex);
  if (cache_->config.has_value() && *cache_->config == config)
    return cache_->values;

  const Eigen::Index n_sobol =
      config.n_candidates > 0
          ? config.n_candidates
          : std::min<Eigen::Index>(512 * dim_, 8192);
  RngStream rng = RngStream::keyed(config.seed, stream_purpose::kMaxSearch);
  const Eigen::MatrixXd sobol = rotated_sobol(n_sobol, dim_, rng);

  Eigen::Index extra_rows = config.extra_candidates.rows();
  if (extra_rows > 0 && config.extra_candidates.cols() != dim_)
    throw std::invalid_argument("y_star: extra candidate dimension mismatch");
  const Eigen::Index n_train =
      config.include_training ? gp_.observations().size() : 0;

  Eigen::MatrixXd cands(n_sobol + n_train + extra_rows, dim_);
  cands.topRows(n_sobol) = sobol;
  if (n_train > 0) cands.middleRows(n_sobol, n_train) = gp_.observations().points();
  if (extra_rows > 0) cands.bottomRows(extra_rows) = config.extra_candidates;

  const Eigen::MatrixXd vals = evaluate_matrix(cands);  // rows x paths
  const int s_count = n_paths();
  Eigen::VectorXd best(s_count);
  Eigen::MatrixXd best_x(s_count, dim_);
  for (int s = 0; s < s_count; ++s) {
    Eigen::Index row;
    best[s] = vals.col(s).maxCoeff(&row);
    best_x.row(s) = cands.row(row);
  }

  // Coordinate-ascent polish per path, shrinking the step whenever one
  // full sweep fails to improve.
  for (int s = 0; s < s_count; ++s) {
    Eigen::VectorXd x = best_x.row(s).transpose();
    double v = best[s];
    double h = 0.05;
    for (int sweep = 0; sweep < config.refine_steps; ++sweep) {
      bool improved = false;
      for (int j = 0; j < dim_; ++j) {
        for (double delta : {h, -h}) {
          Eigen::VectorXd xt = x;
          xt[j] = std::clamp(x[j] + delta, 0.0, 1.0);
          if (xt[j] == x[j]) continue;
          const double vt = evaluate_one(xt, s);
          if (vt > v) {
            v = vt;
            x = std::move(xt);
            improved = true;
          }
        }
      }
      if (!improved) h *= 0.5;
    }
    best[s] = v;
  }

  cache_->config = config;
  cache_->values = best;
  return best;
}

PathBundle draw_paths(const GpPosterior& gp, int n_paths, int n_features,
                      std::uint64_t seed) {
  return PathBundle(gp, n_paths, n_features, seed);
}

JointSampleBatch sample_joint(const PathBundle& bundle,
                              const Eigen::Ref<const Eigen::VectorXd>& x,
                              const MaxSearchConfig& config) {
  if (x.size() != bundle.dim())
    throw std::domain_error("sample_joint: point dimension mismatch");
  if (!x.allFinite() || (x.array() < -1e-12).any() ||
      (x.array() > 1.0 + 1e-12).any())
    throw std::domain_error("sample_joint: point outside the unit cube");

  JointSampleBatch batch;
  batch.x = x;
  batch.y_x = bundle.evaluate(x);
  // Each path's maximum can never fall below the same path's value at x;
  // flooring enforces that consistency for points the search never saw.
  batch.y_star = bundle.y_star(config).cwiseMax(batch.y_x);
  batch.incumbent = bundle.incumbent();
  return batch;
}

Eigen::VectorXd sample_y_star(const PathBundle& bundle,
                              const MaxSearchConfig& config) {
  return bundle.y_star(config);
}

}  // namespace vesbo
