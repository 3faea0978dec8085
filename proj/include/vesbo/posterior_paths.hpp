#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>

#include <Eigen/Dense>

#include "vesbo/gp_model.hpp"
#include "vesbo/rff.hpp"

namespace vesbo {

// Controls the per-path global maximum search (see PathBundle::y_star).
struct MaxSearchConfig {
  // Sobol candidate count; 0 means the default 512 * d capped at 8192.
  Eigen::Index n_candidates = 0;
  int refine_steps = 20;  // coordinate-ascent sweeps from each path's argmax
  std::uint64_t seed = 0;
  bool include_training = true;
  // Extra candidate rows appended to the search set (may be empty).  Used
  // to pin the search to a fixed grid in diagnostics.
  Eigen::MatrixXd extra_candidates;
};

bool operator==(const MaxSearchConfig& a, const MaxSearchConfig& b);

// A batch of posterior sample paths drawn by pathwise conditioning:
//   f_s(x) = phi(x) . w_s + k_t(x)^T (K + jI)^{-1} (y_std - Phi w_s),
// with phi a random Fourier feature map of the fitted kernel and
// w_s ~ N(0, I).  All paths of a bundle share one feature map, so path s
// is a fixed deterministic function; evaluating the bundle twice at the
// same point gives identical values.  Values are returned on the raw
// y scale.  Works in prior mode (no observations) as well.
class PathBundle {
 public:
  PathBundle(const GpPosterior& gp, int n_paths, int n_features,
             std::uint64_t seed);

  int n_paths() const { return static_cast<int>(weights_.cols()); }
  int dim() const { return dim_; }
  Eigen::Index n_features() const { return feature_map_.n_features(); }
  const GpPosterior& gp() const { return gp_; }
  double incumbent() const { return gp_.incumbent(); }

  // All path values at one point (size S).
  Eigen::VectorXd evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // All path values at query rows (M x S).
  Eigen::MatrixXd evaluate_matrix(
      const Eigen::Ref<const Eigen::MatrixXd>& x) const;

  // Value of a single path at one point.
  double evaluate_one(const Eigen::Ref<const Eigen::VectorXd>& x,
                      int path) const;

  // Per-path maximum over the unit cube, found by a Sobol candidate sweep
  // (optionally joined with the training inputs and any extra candidates)
  // followed by coordinate-ascent refinement.  The result is cached: with
  // an unchanged config, repeated calls reuse the same values, so every
  // consumer of this bundle sees common random path maxima.
  Eigen::VectorXd y_star(const MaxSearchConfig& config) const;

 private:
  GpPosterior gp_;  // copied in, so the bundle owns its posterior
  int dim_;
  MaternFeatureMap feature_map_;
  Eigen::MatrixXd weights_;      // m x S prior weights
  Eigen::MatrixXd phi_train_;    // n x m
  Eigen::MatrixXd update_coef_;  // n x S, (K + jI)^{-1} (y_std 1^T - Phi W)

  struct YStarCache {
    std::mutex mutex;
    std::optional<MaxSearchConfig> config;
    Eigen::VectorXd values;
  };
  std::unique_ptr<YStarCache> cache_;
};

PathBundle draw_paths(const GpPosterior& gp, int n_paths, int n_features,
                      std::uint64_t seed);

// Joint Monte Carlo draws of (y*, y_x) at a query point: y_x comes from
// evaluating every path at x and y* is the same path's global maximum,
// floored at its own y_x so the pair is consistent (the maximum cannot be
// smaller than the path's value anywhere).
struct JointSampleBatch {
  Eigen::VectorXd y_star;  // size S
  Eigen::VectorXd y_x;     // size S
  Eigen::VectorXd x;
  double incumbent;        // best observed value of the bundle's GP
};

JointSampleBatch sample_joint(const PathBundle& bundle,
                              const Eigen::Ref<const Eigen::VectorXd>& x,
                              const MaxSearchConfig& config = {});

// Marginal y* draws (the cached per-path maxima alone).
Eigen::VectorXd sample_y_star(const PathBundle& bundle,
                              const MaxSearchConfig& config = {});

}  // namespace vesbo
