#include "vesbo/acq_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace vesbo {

namespace {

Eigen::VectorXd clamp01(Eigen::VectorXd x) {
  return x.cwiseMax(0.0).cwiseMin(1.0);
}

// Projected ascent with an adaptive step: grow on success, halve on
// failure, stop when the step underflows the tolerance.  Gradients fall
// back to central finite differences clipped to the cube.
std::pair<Eigen::VectorXd, double> local_ascent(const AcqObjective& objective,
                                                Eigen::VectorXd x, double v,
                                                const OptimizerConfig& config) {
  const Eigen::Index dim = x.size();
  double step = 0.1;
  for (int it = 0; it < config.max_local_steps; ++it) {
    Eigen::VectorXd grad(dim);
    if (objective.gradient) {
      grad = objective.gradient(x);
    } else {
      for (Eigen::Index j = 0; j < dim; ++j) {
        Eigen::VectorXd xp = x, xm = x;
        xp[j] = std::min(x[j] + config.fd_step, 1.0);
        xm[j] = std::max(x[j] - config.fd_step, 0.0);
        if (xp[j] == xm[j]) {
          grad[j] = 0.0;
          continue;
        }
        const double fp = objective.value(xp);
        const double fm = objective.value(xm);
        grad[j] = (std::isfinite(fp) && std::isfinite(fm))
                      ? (fp - fm) / (xp[j] - xm[j])
                      : 0.0;
      }
    }
    const double norm = grad.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) break;

    const Eigen::VectorXd trial = clamp01(x + (step / norm) * grad);
    const double tv = objective.value(trial);
    if (std::isfinite(tv) && tv > v) {
      x = trial;
      v = tv;
      step *= 1.5;
    } else {
      step *= 0.5;
    }
    if (step < config.step_tol) break;
  }
  return {std::move(x), v};
}

}  // namespace

Eigen::MatrixXd raw_candidates(int dim, const OptimizerConfig& config) {
  if (dim < 1) throw std::invalid_argument("raw_candidates: dim must be >= 1");
  const Eigen::Index n = config.n_raw > 0
                             ? config.n_raw
                             : std::min<Eigen::Index>(512 * dim, 4096);
  RngStream rng =
      RngStream::keyed(config.seed, stream_purpose::kAcqOptimizer);
  const Eigen::Index n_extra = config.extra_starts.rows();
  if (n_extra == 0) return rotated_sobol(n, dim, rng);

  if (config.extra_starts.cols() != dim)
    throw std::invalid_argument(
        "raw_candidates: extra_starts dimension mismatch");
  if (!config.extra_starts.allFinite() ||
      (config.extra_starts.array() < 0.0).any() ||
      (config.extra_starts.array() > 1.0).any())
    throw std::invalid_argument(
        "raw_candidates: extra_starts outside the unit cube");
  Eigen::MatrixXd out(n + n_extra, dim);
  out.topRows(n) = rotated_sobol(n, dim, rng);
  out.bottomRows(n_extra) = config.extra_starts;
  return out;
}

MaximizeResult maximize(const AcqObjective& objective, int dim,
                        const OptimizerConfig& config) {
  if (!objective.value)
    throw std::invalid_argument("maximize: objective.value is required");

  MaximizeResult result;
  result.raw_candidates = raw_candidates(dim, config);
  const Eigen::Index n = result.raw_candidates.rows();

  if (objective.value_batch) {
    result.raw_values = objective.value_batch(result.raw_candidates);
    if (result.raw_values.size() != n)
      throw std::runtime_error("maximize: value_batch size mismatch");
  } else {
    result.raw_values.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
      result.raw_values[i] =
          objective.value(result.raw_candidates.row(i).transpose());
  }

  // Candidates with non-finite scores are discarded.  The first finite
  // maximum wins, so all ties resolve to the lowest candidate index.
  std::vector<Eigen::Index> finite_idx;
  finite_idx.reserve(n);
  result.raw_min = std::numeric_limits<double>::infinity();
  result.raw_max = -std::numeric_limits<double>::infinity();
  Eigen::Index best_idx = -1;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = result.raw_values[i];
    if (!std::isfinite(v)) continue;
    finite_idx.push_back(i);
    result.raw_min = std::min(result.raw_min, v);
    if (v > result.raw_max) {
      result.raw_max = v;
      best_idx = i;
    }
  }
  if (best_idx < 0)
    throw std::runtime_error("maximize: objective non-finite everywhere");

  std::stable_sort(finite_idx.begin(), finite_idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     return result.raw_values[a] > result.raw_values[b];
                   });
  const std::size_t n_starts =
      std::min<std::size_t>(finite_idx.size(),
                            static_cast<std::size_t>(config.n_starts));

  result.x = result.raw_candidates.row(best_idx).transpose();
  result.value = result.raw_max;
  for (std::size_t s = 0; s < n_starts; ++s) {
    const Eigen::Index idx = finite_idx[s];
    auto [x_loc, v_loc] = local_ascent(
        objective, result.raw_candidates.row(idx).transpose(),
        result.raw_values[idx], config);
    // Strict improvement only: on ties the earlier (lower-index) start,
    // and ultimately the raw winner, is kept.
    if (v_loc > result.value) {
      result.x = std::move(x_loc);
      result.value = v_loc;
    }
  }
  return result;
}

}  // namespace vesbo
