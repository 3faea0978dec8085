#include "vesbo/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "vesbo/special_math.hpp"

namespace vesbo {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_mean_std(double mean, double std) {
  if (!std::isfinite(mean) || !std::isfinite(std) || !(std > 0.0))
    throw std::domain_error("acquisition: requires finite mean and std > 0");
}

// Per-sample MES summand from a standardized gap g = (y* - mean) / std,
//   g phi(g) / (2 Phi(g)) - log Phi(g),
// with an asymptotic branch for deep-tail g where the two halves would
// cancel at the g^2/2 scale.
double mes_term(double g) {
  if (g < -30.0) {
    return std::log(-g) + kLogSqrt2Pi - 0.5 + 2.0 / (g * g);
  }
  const NormalEval ne = std_normal(g);
  const double log_pdf = -0.5 * g * g - kLogSqrt2Pi;
  return 0.5 * g * std::exp(log_pdf - ne.log_cdf) - ne.log_cdf;
}

double mes_from_mean_std(double mean, double std,
                         const Eigen::Ref<const Eigen::VectorXd>& y_star) {
  if (!(std > 0.0)) return 0.0;
  double acc = 0.0;
  for (Eigen::Index s = 0; s < y_star.size(); ++s) {
    // Gaps far below the mean signal y* under the posterior mean; such
    // draws are vanishingly rare under path sampling, so the gap is
    // clamped rather than letting the term blow up at the g^2/2 scale.
    const double g = std::max((y_star[s] - mean) / std, -6.0);
    acc += mes_term(g);
  }
  return acc / static_cast<double>(y_star.size());
}

// Clamped improvement gaps of one batch row: z_s = max(y*_s, inc) -
// max(y_x_s, inc), floored.  Returns (mean z, mean log z, mean y*).
struct RowMoments {
  double mean_z;
  double mean_log_z;
  double mean_y_star;
  bool degenerate;
};

RowMoments row_moments(const Eigen::Ref<const Eigen::VectorXd>& y_star,
                       const Eigen::Ref<const Eigen::VectorXd>& y_x,
                       double incumbent, double clamp_floor) {
  const Eigen::Index s_count = y_star.size();
  double sum_z = 0.0, sum_log_z = 0.0, sum_star = 0.0;
  bool degenerate = true;
  for (Eigen::Index s = 0; s < s_count; ++s) {
    const double star = std::max(y_star[s], incumbent);
    const double base = std::max(y_x[s], incumbent);
    const double z = std::max(star - base, clamp_floor);
    if (z > clamp_floor) degenerate = false;
    sum_z += z;
    sum_log_z += std::log(z);
    sum_star += star;
  }
  const double inv = 1.0 / static_cast<double>(s_count);
  return {sum_z * inv, sum_log_z * inv, sum_star * inv, degenerate};
}

void check_batch(const JointSampleBatch& batch, double clamp_floor) {
  if (batch.y_star.size() == 0 || batch.y_star.size() != batch.y_x.size())
    throw std::invalid_argument("acquisition: malformed joint batch");
  if (!(clamp_floor > 0.0))
    throw std::invalid_argument("acquisition: clamp floor must be positive");
}

}  // namespace

AcquisitionKind parse_acquisition(const std::string& name) {
  if (name == "log_ei") return AcquisitionKind::kLogEi;
  if (name == "mes") return AcquisitionKind::kMes;
  if (name == "ves_exp") return AcquisitionKind::kVesExp;
  if (name == "ves_gamma") return AcquisitionKind::kVesGamma;
  throw std::invalid_argument("unknown acquisition: " + name);
}

std::string acquisition_name(AcquisitionKind kind) {
  switch (kind) {
    case AcquisitionKind::kLogEi: return "log_ei";
    case AcquisitionKind::kMes: return "mes";
    case AcquisitionKind::kVesExp: return "ves_exp";
    case AcquisitionKind::kVesGamma: return "ves_gamma";
  }
  throw std::invalid_argument("unknown acquisition kind");
}

double ei_closed(double mean, double std, double incumbent) {
  if (!std::isfinite(mean) || !std::isfinite(std) || std < 0.0)
    throw std::domain_error("acquisition: requires finite mean and std >= 0");
  // Deterministic limit: the improvement is known exactly.
  if (std == 0.0) return std::max(mean - incumbent, 0.0);
  const double u = (mean - incumbent) / std;
  const NormalEval ne = std_normal(u);
  return (mean - incumbent) * ne.cdf + std * ne.pdf;
}

double log_ei(double mean, double std, double incumbent) {
  check_mean_std(mean, std);
  const double u = (mean - incumbent) / std;
  if (u >= -10.0) {
    const NormalEval ne = std_normal(u);
    return std::log(std) + std::log(u * ne.cdf + ne.pdf);
  }
  // Deep tail: EI/std = phi(u)/u^2 (1 - 3 u^-2 + 15 u^-4 - ...), the
  // asymptotic complement of the Mills ratio.
  const double u2 = u * u;
  const double inv2 = 1.0 / u2;
  const double series =
      inv2 * (-3.0 +
              inv2 * (15.0 +
                      inv2 * (-105.0 +
                              inv2 * (945.0 +
                                      inv2 * (-10395.0 + inv2 * 135135.0)))));
  return std::log(std) - 0.5 * u2 - kLogSqrt2Pi - std::log(u2) +
         std::log1p(series);
}

double mes_value(const GpPosterior& gp,
                 const Eigen::Ref<const Eigen::VectorXd>& x,
                 const Eigen::Ref<const Eigen::VectorXd>& y_star_samples) {
  if (y_star_samples.size() == 0)
    throw std::invalid_argument("mes_value: no y* samples");
  const auto [mean, var] = posterior_mean_var(gp, x.transpose());
  return mes_from_mean_std(mean[0], std::sqrt(var[0]), y_star_samples);
}

ZMoments z_moments(const JointSampleBatch& batch, double clamp_floor) {
  check_batch(batch, clamp_floor);
  const RowMoments rm =
      row_moments(batch.y_star, batch.y_x, batch.incumbent, clamp_floor);
  ZMoments out;
  out.mean_z = rm.mean_z;
  out.mean_log_z = rm.mean_log_z;
  out.mean_y_star = rm.mean_y_star;
  out.jensen_gap = std::max(std::log(rm.mean_z) - rm.mean_log_z, 0.0);
  out.degenerate = rm.degenerate;
  return out;
}

double eslbo_exp(const JointSampleBatch& batch, double lambda,
                 double clamp_floor) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw std::domain_error("eslbo_exp: lambda must be positive");
  const ZMoments m = z_moments(batch, clamp_floor);
  return std::log(lambda) - lambda * m.mean_z;
}

double solve_lambda(const JointSampleBatch& batch, double clamp_floor,
                    bool* degenerate) {
  const ZMoments m = z_moments(batch, clamp_floor);
  if (degenerate != nullptr) *degenerate = m.degenerate;
  return 1.0 / m.mean_z;
}

double eslbo_gamma(const ZMoments& moments, const GammaParams& params) {
  if (!(params.k > 0.0) || !(params.beta > 0.0) ||
      !std::isfinite(params.k) || !std::isfinite(params.beta))
    throw std::domain_error("eslbo_gamma: requires k > 0 and beta > 0");
  // Both beta terms of the bound, -beta E[y*] + beta E[max(y_x, inc)],
  // are taken through the clamped gap so that k = 1 reduces exactly to
  // the exponential bound.
  return params.k * std::log(params.beta) - log_gamma(params.k) +
         (params.k - 1.0) * moments.mean_log_z - params.beta * moments.mean_z;
}

double eslbo_gamma(const JointSampleBatch& batch, const GammaParams& params,
                   double clamp_floor) {
  return eslbo_gamma(z_moments(batch, clamp_floor), params);
}

double solve_k(const ZMoments& moments, double regularization_lambda,
               double k_min, double k_max) {
  if (!(k_min > 0.0) || !(k_max > k_min))
    throw std::invalid_argument("solve_k: invalid shape bounds");
  if (regularization_lambda < 0.0)
    throw std::invalid_argument("solve_k: negative regularization");
  const double gap = std::max(moments.jensen_gap, 0.0);
  // xi(k) = log k - psi(k) is strictly decreasing from +inf to 0, so the
  // shape equation xi(k) = gap has exactly one root when the gap lies in
  // the attainable range.
  auto residual = [&](double k) { return std::log(k) - digamma(k) - gap; };

  constexpr int kGridPoints = 17;
  const double log_lo = std::log(k_min), log_hi = std::log(k_max);
  auto grid_at = [&](int i) {
    return std::exp(log_lo + (log_hi - log_lo) * i / (kGridPoints - 1));
  };

  if (regularization_lambda == 0.0) {
    if (residual(k_max) > 0.0) return k_max;  // gap below xi(k_max)
    if (residual(k_min) < 0.0) return k_min;  // gap above xi(k_min)
    double lo = k_min, f_lo = residual(lo);
    for (int i = 1; i < kGridPoints; ++i) {
      const double hi = grid_at(i);
      const double f_hi = residual(hi);
      if (f_lo == 0.0) return lo;
      if ((f_lo > 0.0) != (f_hi > 0.0))
        return brent_root(residual, lo, hi, 1e-10);
      lo = hi;
      f_lo = f_hi;
    }
    return k_max;  // unreachable for gaps inside the attainable range
  }

  auto penalized = [&](double k) {
    const double r = residual(k);
    return r * r + regularization_lambda * (k - 1.0) * (k - 1.0);
  };
  int best = 0;
  double best_f = penalized(grid_at(0));
  for (int i = 1; i < kGridPoints; ++i) {
    const double f = penalized(grid_at(i));
    if (f < best_f) {
      best_f = f;
      best = i;
    }
  }
  const double lo = grid_at(std::max(best - 1, 0));
  const double hi = grid_at(std::min(best + 1, kGridPoints - 1));
  double k = brent_min(penalized, lo, hi, 1e-10);
  if (penalized(grid_at(best)) < penalized(k)) k = grid_at(best);
  return std::clamp(k, k_min, k_max);
}

double solve_beta(double k, const ZMoments& moments) {
  if (!(k > 0.0) || !std::isfinite(k))
    throw std::domain_error("solve_beta: requires k > 0");
  if (!(moments.mean_z > 0.0))
    throw std::domain_error("solve_beta: requires positive mean gap");
  return k / moments.mean_z;
}

double eslbo_gamma_profiled(const JointSampleBatch& batch,
                            const AcquisitionSpec& spec) {
  const ZMoments m = z_moments(batch, spec.clamp_floor);
  const double k =
      solve_k(m, spec.regularization_lambda, spec.k_min, spec.k_max);
  return eslbo_gamma(m, GammaParams{k, solve_beta(k, m)});
}

namespace {

// ESLBO with fixed variational parameters as a function of the candidate,
// sharing the bundle's cached per-path maxima across all queries.  The
// scalar form evaluates the identical discretized surface as the batch
// form so the local ascent scores agree with the raw sweep it starts from.
AcqObjective make_eslbo_objective(const PathBundle& bundle,
                                  const MaxSearchConfig& search,
                                  const GammaParams& params,
                                  double clamp_floor) {
  const Eigen::VectorXd base_star = bundle.y_star(search);
  const double incumbent = bundle.incumbent();
  auto score = [&bundle, base_star, incumbent, params,
                clamp_floor](const Eigen::VectorXd& y_x) {
    const Eigen::VectorXd y_star = base_star.cwiseMax(y_x);
    const RowMoments rm = row_moments(y_star, y_x, incumbent, clamp_floor);
    return params.k * std::log(params.beta) - log_gamma(params.k) +
           (params.k - 1.0) * rm.mean_log_z - params.beta * rm.mean_z;
  };
  AcqObjective obj;
  obj.value = [&bundle, score](const Eigen::VectorXd& x) {
    return score(bundle.evaluate(x));
  };
  obj.value_batch = [&bundle, score](const Eigen::MatrixXd& x) {
    const Eigen::MatrixXd vals = bundle.evaluate_matrix(x);
    Eigen::VectorXd out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      out[i] = score(vals.row(i).transpose());
    return out;
  };
  return obj;
}

// Monte Carlo expected improvement over the bundle's paths; used for the
// warm start and as the flat-bound fallback ranking.
AcqObjective make_mc_ei_objective(const PathBundle& bundle) {
  const double incumbent = bundle.incumbent();
  AcqObjective obj;
  obj.value = [&bundle, incumbent](const Eigen::VectorXd& x) {
    return (bundle.evaluate(x).array() - incumbent).max(0.0).mean();
  };
  obj.value_batch = [&bundle, incumbent](const Eigen::MatrixXd& x) {
    const Eigen::MatrixXd vals = bundle.evaluate_matrix(x);
    return ((vals.array() - incumbent).max(0.0).rowwise().mean()).matrix()
        .eval();
  };
  return obj;
}

AcqObjective make_profiled_objective(const PathBundle& bundle,
                                     const MaxSearchConfig& search,
                                     const AcquisitionSpec& spec) {
  const Eigen::VectorXd base_star = bundle.y_star(search);
  const double incumbent = bundle.incumbent();
  auto score = [base_star, incumbent, spec](const Eigen::VectorXd& y_x) {
    JointSampleBatch batch;
    batch.incumbent = incumbent;
    batch.y_x = y_x;
    batch.y_star = base_star.cwiseMax(y_x);
    return eslbo_gamma_profiled(batch, spec);
  };
  AcqObjective obj;
  obj.value = [&bundle, score](const Eigen::VectorXd& x) {
    return score(bundle.evaluate(x));
  };
  obj.value_batch = [&bundle, score](const Eigen::MatrixXd& x) {
    const Eigen::MatrixXd vals = bundle.evaluate_matrix(x);
    Eigen::VectorXd out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      out[i] = score(vals.row(i).transpose());
    return out;
  };
  return obj;
}

AcqObjective make_log_ei_objective(const GpPosterior& gp) {
  const double incumbent = gp.incumbent();
  auto score = [incumbent](double mean, double var) {
    const double sd = std::sqrt(std::max(var, 0.0));
    if (!(sd > 0.0)) {
      // Deterministic posterior slice: EI collapses to max(mean - inc, 0).
      return mean > incumbent ? std::log(mean - incumbent) : -kInf;
    }
    return log_ei(mean, sd, incumbent);
  };
  AcqObjective obj;
  obj.value = [&gp, score](const Eigen::VectorXd& x) {
    const auto [mean, var] = posterior_mean_var(gp, x.transpose());
    return score(mean[0], var[0]);
  };
  obj.value_batch = [&gp, score](const Eigen::MatrixXd& x) {
    const auto [mean, var] = posterior_mean_var(gp, x);
    Eigen::VectorXd out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      out[i] = score(mean[i], var[i]);
    return out;
  };
  return obj;
}

AcqObjective make_mes_objective(const GpPosterior& gp,
                                const Eigen::VectorXd& y_star_samples) {
  AcqObjective obj;
  obj.value = [&gp, y_star_samples](const Eigen::VectorXd& x) {
    return mes_value(gp, x, y_star_samples);
  };
  obj.value_batch = [&gp, y_star_samples](const Eigen::MatrixXd& x) {
    const auto [mean, var] = posterior_mean_var(gp, x);
    Eigen::VectorXd out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      out[i] = mes_from_mean_std(mean[i], std::sqrt(var[i]), y_star_samples);
    return out;
  };
  return obj;
}

bool nearly_flat(const MaximizeResult& res) {
  return res.raw_max - res.raw_min <=
         1e-12 * std::max(1.0, std::abs(res.raw_max));
}

// Flat-bound fallback: rank the raw candidates by MC-EI; if that is flat
// too, prefer the largest posterior standard deviation, then the lowest
// candidate index.
Eigen::VectorXd fallback_select(const GpPosterior& gp,
                                const PathBundle& bundle,
                                const Eigen::MatrixXd& candidates) {
  const AcqObjective ei = make_mc_ei_objective(bundle);
  const Eigen::VectorXd ei_vals = ei.value_batch(candidates);
  Eigen::Index best = 0;
  double best_val = ei_vals[0];
  for (Eigen::Index i = 1; i < ei_vals.size(); ++i)
    if (ei_vals[i] > best_val) {
      best_val = ei_vals[i];
      best = i;
    }
  const double spread = ei_vals.maxCoeff() - ei_vals.minCoeff();
  if (spread > 1e-15 * std::max(1.0, std::abs(best_val)))
    return candidates.row(best).transpose();

  const auto [mean, var] = posterior_mean_var(gp, candidates);
  Eigen::Index widest = 0;
  double widest_var = var[0];
  for (Eigen::Index i = 1; i < var.size(); ++i)
    if (var[i] > widest_var) {
      widest_var = var[i];
      widest = i;
    }
  return candidates.row(widest).transpose();
}

}  // namespace

VesStep ves_gamma_step(const GpPosterior& gp, const PathBundle& bundle,
                       const Eigen::Ref<const Eigen::VectorXd>& x_current,
                       const AcquisitionSpec& spec,
                       const OptimizerConfig& optimizer,
                       const MaxSearchConfig& search) {
  const JointSampleBatch batch = sample_joint(bundle, x_current, search);
  const ZMoments moments = z_moments(batch, spec.clamp_floor);

  GammaParams params;
  if (spec.kind == AcquisitionKind::kVesExp) {
    params.k = 1.0;
    params.beta = 1.0 / moments.mean_z;
  } else {
    params.k = solve_k(moments, spec.regularization_lambda, spec.k_min,
                       spec.k_max);
    params.beta = solve_beta(params.k, moments);
  }

  const AcqObjective objective =
      make_eslbo_objective(bundle, search, params, spec.clamp_floor);
  const MaximizeResult res = maximize(objective, bundle.dim(), optimizer);

  VesStep step;
  step.params = params;
  step.moments = moments;
  step.degenerate_batch = moments.degenerate;
  if (nearly_flat(res)) {
    step.x = fallback_select(gp, bundle, res.raw_candidates);
    step.fallback_mc_ei = true;
  } else {
    step.x = res.x;
  }
  return step;
}

VesSelection ves_select(const GpPosterior& gp, const PathBundle& bundle,
                        const AcquisitionSpec& spec,
                        const OptimizerConfig& optimizer,
                        const MaxSearchConfig& search) {
  const int dim = bundle.dim();
  VesSelection sel;

  if (spec.use_varpro) {
    const AcqObjective objective =
        make_profiled_objective(bundle, search, spec);
    const MaximizeResult res = maximize(objective, dim, optimizer);
    sel.x = nearly_flat(res)
                ? fallback_select(gp, bundle, res.raw_candidates)
                : res.x;
    sel.fallback_mc_ei = nearly_flat(res);
    sel.moments =
        z_moments(sample_joint(bundle, sel.x, search), spec.clamp_floor);
    sel.params.k = solve_k(sel.moments, spec.regularization_lambda,
                           spec.k_min, spec.k_max);
    sel.params.beta = solve_beta(sel.params.k, sel.moments);
    sel.degenerate_batch = sel.moments.degenerate;
    sel.inner_iters_used = 1;
    return sel;
  }

  // Warm start at the best MC-EI raw candidate.
  {
    const AcqObjective ei = make_mc_ei_objective(bundle);
    const Eigen::MatrixXd cands = raw_candidates(dim, optimizer);
    const Eigen::VectorXd vals = ei.value_batch(cands);
    Eigen::Index best = 0;
    vals.maxCoeff(&best);
    sel.x = cands.row(best).transpose();
  }

  for (int round = 1; round <= spec.inner_iters; ++round) {
    const VesStep step =
        ves_gamma_step(gp, bundle, sel.x, spec, optimizer, search);
    const double moved = (step.x - sel.x).norm();
    sel.x = step.x;
    sel.params = step.params;
    sel.moments = step.moments;
    sel.degenerate_batch = sel.degenerate_batch || step.degenerate_batch;
    sel.fallback_mc_ei = sel.fallback_mc_ei || step.fallback_mc_ei;
    sel.inner_iters_used = round;
    if (moved < dim * spec.early_stop_scale) break;
  }
  return sel;
}

SelectionResult select_next(const GpPosterior& gp, const PathBundle* bundle,
                            const AcquisitionSpec& spec,
                            const OptimizerConfig& optimizer,
                            const MaxSearchConfig& search) {
  // Seed the optimizer's candidate set with the best observed input.  A
  // bare space-filling sweep can miss the improvement region once it has
  // shrunk below the candidate spacing; at that point every Monte Carlo
  // improvement surface reads exactly flat and the search degenerates to
  // its tie-break.  The incumbent's input always carries live improvement
  // signal when the model sees any, keeping the basin reachable for every
  // acquisition on equal footing.
  OptimizerConfig opt = optimizer;
  if (gp.observations().size() > 0) {
    Eigen::Index best = 0;
    gp.observations().values().maxCoeff(&best);
    const Eigen::Index row = opt.extra_starts.rows();
    opt.extra_starts.conservativeResize(row + 1, gp.dim());
    opt.extra_starts.row(row) = gp.observations().points().row(best);
  }

  SelectionResult out;
  switch (spec.kind) {
    case AcquisitionKind::kLogEi: {
      const AcqObjective objective = make_log_ei_objective(gp);
      const MaximizeResult res = maximize(objective, gp.dim(), opt);
      out.x = res.x;
      out.value = res.value;
      return out;
    }
    case AcquisitionKind::kMes: {
      if (bundle == nullptr)
        throw std::invalid_argument("select_next: mes needs a path bundle");
      const Eigen::VectorXd y_star = sample_y_star(*bundle, search);
      const AcqObjective objective = make_mes_objective(gp, y_star);
      const MaximizeResult res = maximize(objective, gp.dim(), opt);
      out.x = res.x;
      out.value = res.value;
      return out;
    }
    case AcquisitionKind::kVesExp:
    case AcquisitionKind::kVesGamma: {
      if (bundle == nullptr)
        throw std::invalid_argument("select_next: ves needs a path bundle");
      const VesSelection sel =
          ves_select(gp, *bundle, spec, opt, search);
      out.x = sel.x;
      out.params = sel.params;
      out.moments = sel.moments;
      out.inner_iters_used = sel.inner_iters_used;
      out.degenerate_batch = sel.degenerate_batch;
      out.fallback_mc_ei = sel.fallback_mc_ei;
      out.value = eslbo_gamma(
          z_moments(sample_joint(*bundle, sel.x, search), spec.clamp_floor),
          sel.params);
      return out;
    }
  }
  throw std::invalid_argument("select_next: unknown acquisition kind");
}

}  // namespace vesbo
