#pragma once

#include <string>

#include <Eigen/Dense>

#include "vesbo/acq_optimizer.hpp"
#include "vesbo/gp_model.hpp"
#include "vesbo/posterior_paths.hpp"

namespace vesbo {

enum class AcquisitionKind { kLogEi, kMes, kVesExp, kVesGamma };

AcquisitionKind parse_acquisition(const std::string& name);
std::string acquisition_name(AcquisitionKind kind);

struct AcquisitionSpec {
  AcquisitionKind kind = AcquisitionKind::kLogEi;
  int mc_samples = 128;    // posterior paths per bundle
  int inner_iters = 5;     // alternating rounds for the variational family
  double regularization_lambda = 1.0;  // shape-equation regularizer weight
  double clamp_floor = 1e-10;          // lower clamp on z = y* - y_x
  double early_stop_scale = 1e-5;      // inner loop stops below d * this
  double k_min = 1e-3;
  double k_max = 1e4;
  bool use_varpro = false;  // profiled single-stage objective instead of
                            // alternating rounds
};

// Expected improvement over the incumbent under N(mean, std^2):
//   EI = (mean - inc) Phi(u) + std phi(u),  u = (mean - inc) / std,
// with the deterministic limit max(mean - inc, 0) at std == 0.
// Requires std >= 0 (std::domain_error otherwise).
double ei_closed(double mean, double std, double incumbent);

// log EI, stable deep in the negative-u tail where EI underflows: for
// u < -10 it switches to the asymptotic expansion of the Mills ratio.
double log_ei(double mean, double std, double incumbent);

// Max-value entropy search score at x given marginal y* draws:
//   alpha(x) = mean_s [ g phi(g) / (2 Phi(g)) - log Phi(g) ],
//   g = (y*_s - mean(x)) / std(x) clamped to g >= -6,
// computed on the standardized scale.  Returns 0 at zero posterior std.
double mes_value(const GpPosterior& gp,
                 const Eigen::Ref<const Eigen::VectorXd>& x,
                 const Eigen::Ref<const Eigen::VectorXd>& y_star_samples);

// Clamped improvement-gap moments of a joint batch, where
//   z_s = max(y*_s, incumbent) - max(y_x_s, incumbent),
// clamped below at clamp_floor.  jensen_gap = log(mean z) - mean(log z)
// >= 0; `degenerate` flags batches whose every gap sits at the clamp
// floor.
struct ZMoments {
  double mean_z = 0.0;
  double mean_log_z = 0.0;
  double mean_y_star = 0.0;      // mean of max(y*_s, incumbent)
  double jensen_gap = 0.0;
  bool degenerate = false;
};

ZMoments z_moments(const JointSampleBatch& batch, double clamp_floor = 1e-10);

// Evidence-style lower bound for the exponential variational family:
//   ESLBO_exp = log(lambda) - lambda * mean(z).
double eslbo_exp(const JointSampleBatch& batch, double lambda,
                 double clamp_floor = 1e-10);

// Closed-form maximizer of ESLBO_exp in lambda: 1 / mean(z).  Sets
// *degenerate (when given) if the batch is fully clamped.
double solve_lambda(const JointSampleBatch& batch, double clamp_floor = 1e-10,
                    bool* degenerate = nullptr);

struct GammaParams {
  double k = 1.0;
  double beta = 1.0;
};

// Lower bound for the Gamma(k, beta) variational family:
//   k log(beta) - log Gamma(k) + (k - 1) mean(log z)
//     - beta mean(y*) + beta mean(max(y_x, incumbent)),
// which reduces to ESLBO_exp at k = 1 since both beta terms combine into
// -beta mean(z).  Requires k > 0 and beta > 0 (std::domain_error).
double eslbo_gamma(const JointSampleBatch& batch, const GammaParams& params,
                   double clamp_floor = 1e-10);
double eslbo_gamma(const ZMoments& moments, const GammaParams& params);

// Shape equation xi(k) := log(k) - digamma(k) = jensen_gap, solved on
// [k_min, k_max].  With regularization_lambda = 0 the unregularized root
// is bracketed by a coarse log-grid scan and polished by brent_root
// (clamping to the nearer bound when the gap leaves the attainable range);
// otherwise minimizes xi-residual^2 + lambda (k - 1)^2 by a 17-point
// log-grid scan plus brent_min on the bracketing neighbors.
double solve_k(const ZMoments& moments, double regularization_lambda,
               double k_min = 1e-3, double k_max = 1e4);

// Closed-form rate given the shape: beta = k / mean(z).
double solve_beta(double k, const ZMoments& moments);

// Profiled objective: fits (k, beta) to the batch inline and returns the
// resulting ESLBO_gamma, collapsing the alternating scheme into a single
// function of x.
double eslbo_gamma_profiled(const JointSampleBatch& batch,
                            const AcquisitionSpec& spec);

// One alternating round: fit the variational parameters to the batch at
// x_current, then maximize the resulting bound over x.
struct VesStep {
  Eigen::VectorXd x;
  GammaParams params;
  ZMoments moments;
  bool degenerate_batch = false;  // batch at x_current was fully clamped
  bool fallback_mc_ei = false;    // bound was flat; ranked by MC-EI instead
};

VesStep ves_gamma_step(const GpPosterior& gp, const PathBundle& bundle,
                       const Eigen::Ref<const Eigen::VectorXd>& x_current,
                       const AcquisitionSpec& spec,
                       const OptimizerConfig& optimizer,
                       const MaxSearchConfig& search);

// Full inner loop: MC-EI warm start, then up to spec.inner_iters
// alternating rounds with early stop once the iterate moves less than
// dim * spec.early_stop_scale.  With spec.use_varpro the profiled
// objective is maximized directly instead.
struct VesSelection {
  Eigen::VectorXd x;
  GammaParams params;
  ZMoments moments;
  int inner_iters_used = 0;
  bool degenerate_batch = false;
  bool fallback_mc_ei = false;
};

VesSelection ves_select(const GpPosterior& gp, const PathBundle& bundle,
                        const AcquisitionSpec& spec,
                        const OptimizerConfig& optimizer,
                        const MaxSearchConfig& search);

// Next-point selection for any acquisition kind.  `bundle` may be null
// for kLogEi (which needs no posterior paths); all other kinds require it.
struct SelectionResult {
  Eigen::VectorXd x;
  double value = 0.0;        // acquisition value at x
  GammaParams params;        // variational parameters (VES kinds)
  ZMoments moments;          // final batch moments (VES kinds)
  int inner_iters_used = 0;
  bool degenerate_batch = false;
  bool fallback_mc_ei = false;
};

SelectionResult select_next(const GpPosterior& gp, const PathBundle* bundle,
                            const AcquisitionSpec& spec,
                            const OptimizerConfig& optimizer,
                            const MaxSearchConfig& search);

}  // namespace vesbo
