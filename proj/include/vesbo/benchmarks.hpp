#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vesbo {

// A maximization test problem.  Evaluation is deterministic and finite on
// the box; classical minimization problems are stored negated so larger is
// always better.  `optimum` is the known maximum value when available.
class Benchmark {
 public:
  Benchmark(std::string name, Eigen::MatrixXd bounds,
            std::function<double(const Eigen::VectorXd&)> fn,
            std::optional<double> optimum);

  const std::string& name() const { return name_; }
  int dim() const { return static_cast<int>(bounds_.rows()); }

  // Row i holds [lower_i, upper_i].
  const Eigen::MatrixXd& bounds() const { return bounds_; }
  std::optional<double> optimum() const { return optimum_; }

  // Evaluate at native box coordinates.
  double evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // Evaluate at unit-cube coordinates (affinely mapped onto the box).
  double evaluate_unit(const Eigen::Ref<const Eigen::VectorXd>& u) const;

  Eigen::VectorXd to_box(const Eigen::Ref<const Eigen::VectorXd>& u) const;

 private:
  std::string name_;
  Eigen::MatrixXd bounds_;
  std::function<double(const Eigen::VectorXd&)> fn_;
  std::optional<double> optimum_;
};

// Synthetic suite: branin (d=2), hartmann6 (d=6), plus levy<d>,
// ackley<d>, michalewicz<d> and griewank<d> with a numeric dimension
// suffix (defaults: levy4, ackley5, michalewicz5, griewank8).  Throws
// std::invalid_argument for unknown names.
Benchmark make_synthetic(const std::string& name);

// A fixed draw from a Matern-5/2 GP prior on [0, 1]^d (isotropic
// lengthscale, unit signal variance) realized with a random Fourier
// feature map, so the function is cheap, smooth and exactly reproducible
// from the seed.  No known optimum.
Benchmark make_gp_sample(int dim, double lengthscale, std::uint64_t seed,
                         Eigen::Index n_features = 4096);

// Name registry: synthetic names as above, plus "gp<d>-l<ls>[-s<seed>]"
// for GP prior draws, e.g. "gp4-l0.2-s7".
Benchmark make_benchmark(const std::string& name);

std::vector<std::string> benchmark_names();

}  // namespace vesbo
