#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "vesbo/rng.hpp"

namespace vesbo {

// Acquisition objective to maximize over the unit cube.  `value` is
// required; `value_batch` (rows -> values) is used for the raw candidate
// sweep when present, and `gradient` replaces finite differences in the
// local refinement when present.
struct AcqObjective {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::MatrixXd&)> value_batch;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

struct OptimizerConfig {
  Eigen::Index n_raw = 0;  // 0 means 512 * d capped at 4096
  int n_starts = 10;       // top raw candidates refined locally
  int max_local_steps = 50;
  double step_tol = 1e-6;  // stop once the trust step shrinks below this
  double fd_step = 1e-4;   // central finite-difference half-width
  std::uint64_t seed = 0;

  // Extra rows appended after the Sobol block of the raw candidate set.
  // They are scored, ranked and refined exactly like Sobol candidates,
  // which lets callers pin down basins a space-filling sweep can miss
  // (e.g. the shrinking improvement region around the incumbent late in
  // a run, where Monte Carlo improvement objectives are otherwise flat).
  Eigen::MatrixXd extra_starts;
};

struct MaximizeResult {
  Eigen::VectorXd x;
  double value;

  // Raw sweep diagnostics: the Sobol candidate set, its objective values
  // (non-finite entries mark discarded candidates) and their finite range.
  Eigen::MatrixXd raw_candidates;
  Eigen::VectorXd raw_values;
  double raw_min = 0.0;
  double raw_max = 0.0;
};

// The rotated-Sobol raw candidate set used by maximize for this config.
Eigen::MatrixXd raw_candidates(int dim, const OptimizerConfig& config);

// Maximizes the objective over [0, 1]^d: a rotated-Sobol sweep scores all
// raw candidates, then the best `n_starts` are refined by projected local
// ascent with an adaptive step size.  Fully deterministic given the seed.
// Non-finite candidates are discarded; ties are broken by the lowest raw
// candidate index.  Throws std::runtime_error when every candidate is
// non-finite.
MaximizeResult maximize(const AcqObjective& objective, int dim,
                        const OptimizerConfig& config);

}  // namespace vesbo
