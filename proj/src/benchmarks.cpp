#include "vesbo/benchmarks.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <regex>
#include <stdexcept>
#include <utility>

#include "vesbo/rff.hpp"
#include "vesbo/rng.hpp"

namespace vesbo {

namespace {

Eigen::MatrixXd symmetric_box(int dim, double half_width) {
  Eigen::MatrixXd bounds(dim, 2);
  bounds.col(0).setConstant(-half_width);
  bounds.col(1).setConstant(half_width);
  return bounds;
}

Eigen::MatrixXd unit_box(int dim) {
  Eigen::MatrixXd bounds(dim, 2);
  bounds.col(0).setZero();
  bounds.col(1).setOnes();
  return bounds;
}

// All classical problems below are minimization tasks; they are stored
// negated so every benchmark is maximized.

Benchmark make_branin() {
  Eigen::MatrixXd bounds(2, 2);
  bounds << -5.0, 10.0, 0.0, 15.0;
  auto fn = [](const Eigen::VectorXd& x) {
    const double b = 5.1 / (4.0 * M_PI * M_PI);
    const double c = 5.0 / M_PI;
    const double t = 1.0 / (8.0 * M_PI);
    const double inner = x[1] - b * x[0] * x[0] + c * x[0] - 6.0;
    return -(inner * inner + 10.0 * (1.0 - t) * std::cos(x[0]) + 10.0);
  };
  // Global minimum 5 / (4 pi).
  return Benchmark("branin", bounds, fn, -0.39788735772973816);
}

Benchmark make_hartmann6() {
  static const Eigen::Matrix<double, 4, 6> a = [] {
    Eigen::Matrix<double, 4, 6> m;
    m << 10.0, 3.0, 17.0, 3.5, 1.7, 8.0,
        0.05, 10.0, 17.0, 0.1, 8.0, 14.0,
        3.0, 3.5, 1.7, 10.0, 17.0, 8.0,
        17.0, 8.0, 0.05, 10.0, 0.1, 14.0;
    return m;
  }();
  static const Eigen::Matrix<double, 4, 6> p = [] {
    Eigen::Matrix<double, 4, 6> m;
    m << 1312, 1696, 5569, 124, 8283, 5886,
        2329, 4135, 8307, 3736, 1004, 9991,
        2348, 1451, 3522, 2883, 3047, 6650,
        4047, 8828, 8732, 5743, 1091, 381;
    m *= 1e-4;
    return m;
  }();
  static const Eigen::Vector4d alpha(1.0, 1.2, 3.0, 3.2);
  auto fn = [](const Eigen::VectorXd& x) {
    double sum = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double expo =
          (a.row(i).transpose().array() *
           (x.array() - p.row(i).transpose().array()).square())
              .sum();
      sum += alpha[i] * std::exp(-expo);
    }
    return sum;  // the classical form is already negative; sum is -f
  };
  return Benchmark("hartmann6", unit_box(6), fn, 3.3223680114155094);
}

Benchmark make_levy(int dim) {
  auto fn = [dim](const Eigen::VectorXd& x) {
    const Eigen::ArrayXd w = 1.0 + (x.array() - 1.0) / 4.0;
    const double s1 = std::sin(M_PI * w[0]);
    double total = s1 * s1;
    for (int i = 0; i < dim - 1; ++i) {
      const double si = std::sin(M_PI * w[i] + 1.0);
      total += (w[i] - 1.0) * (w[i] - 1.0) * (1.0 + 10.0 * si * si);
    }
    const double sd = std::sin(2.0 * M_PI * w[dim - 1]);
    total += (w[dim - 1] - 1.0) * (w[dim - 1] - 1.0) * (1.0 + sd * sd);
    return -total;
  };
  return Benchmark("levy" + std::to_string(dim), symmetric_box(dim, 10.0),
                   fn, 0.0);
}

Benchmark make_ackley(int dim) {
  auto fn = [dim](const Eigen::VectorXd& x) {
    const double inv_d = 1.0 / static_cast<double>(dim);
    const double rms = std::sqrt(inv_d * x.squaredNorm());
    const double cos_mean = inv_d * (2.0 * M_PI * x.array()).cos().sum();
    return -(-20.0 * std::exp(-0.2 * rms) - std::exp(cos_mean) + 20.0 +
             std::exp(1.0));
  };
  return Benchmark("ackley" + std::to_string(dim),
                   symmetric_box(dim, 32.768), fn, 0.0);
}

Benchmark make_michalewicz(int dim) {
  auto fn = [dim](const Eigen::VectorXd& x) {
    constexpr double m = 10.0;
    double total = 0.0;
    for (int i = 0; i < dim; ++i) {
      const double s =
          std::sin((i + 1) * x[i] * x[i] / M_PI);
      total += std::sin(x[i]) * std::pow(s, 2.0 * m);
    }
    return total;  // classical form is -total; negating back gives total
  };
  Eigen::MatrixXd bounds(dim, 2);
  bounds.col(0).setZero();
  bounds.col(1).setConstant(M_PI);
  // Certified optima for the dimensions used in experiments.
  std::optional<double> optimum;
  if (dim == 2) optimum = 1.8013034100985534;
  if (dim == 5) optimum = 4.687658179088111;
  return Benchmark("michalewicz" + std::to_string(dim), bounds, fn, optimum);
}

Benchmark make_griewank(int dim) {
  auto fn = [dim](const Eigen::VectorXd& x) {
    double prod = 1.0;
    for (int i = 0; i < dim; ++i)
      prod *= std::cos(x[i] / std::sqrt(static_cast<double>(i + 1)));
    return -(x.squaredNorm() / 4000.0 - prod + 1.0);
  };
  return Benchmark("griewank" + std::to_string(dim),
                   symmetric_box(dim, 600.0), fn, 0.0);
}

// Splits a trailing integer off a name, e.g. ("ackley7") -> ("ackley", 7).
std::pair<std::string, int> split_dim_suffix(const std::string& name,
                                             int default_dim) {
  std::size_t pos = name.size();
  while (pos > 0 && std::isdigit(static_cast<unsigned char>(name[pos - 1])))
    --pos;
  if (pos == name.size()) return {name, default_dim};
  return {name.substr(0, pos), std::stoi(name.substr(pos))};
}

}  // namespace

Benchmark::Benchmark(std::string name, Eigen::MatrixXd bounds,
                     std::function<double(const Eigen::VectorXd&)> fn,
                     std::optional<double> optimum)
    : name_(std::move(name)),
      bounds_(std::move(bounds)),
      fn_(std::move(fn)),
      optimum_(optimum) {
  if (bounds_.rows() < 1 || bounds_.cols() != 2)
    throw std::invalid_argument("Benchmark: bounds must be d x 2");
  if (!(bounds_.col(0).array() < bounds_.col(1).array()).all())
    throw std::invalid_argument("Benchmark: lower bounds must be below upper");
  if (!fn_) throw std::invalid_argument("Benchmark: missing evaluator");
}

double Benchmark::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim())
    throw std::invalid_argument("Benchmark: point dimension mismatch");
  if (!x.allFinite())
    throw std::invalid_argument("Benchmark: non-finite point");
  const double y = fn_(x);
  if (!std::isfinite(y))
    throw std::runtime_error("Benchmark: non-finite value at query");
  return y;
}

Eigen::VectorXd Benchmark::to_box(
    const Eigen::Ref<const Eigen::VectorXd>& u) const {
  if (u.size() != dim())
    throw std::invalid_argument("Benchmark: point dimension mismatch");
  const Eigen::ArrayXd clipped = u.array().max(0.0).min(1.0);
  return (bounds_.col(0).array() +
          clipped * (bounds_.col(1) - bounds_.col(0)).array())
      .matrix();
}

double Benchmark::evaluate_unit(
    const Eigen::Ref<const Eigen::VectorXd>& u) const {
  if (!u.allFinite() || (u.array() < -1e-12).any() ||
      (u.array() > 1.0 + 1e-12).any())
    throw std::invalid_argument("Benchmark: point outside the unit cube");
  return evaluate(to_box(u));
}

Benchmark make_synthetic(const std::string& name) {
  if (name == "branin") return make_branin();
  if (name == "hartmann6") return make_hartmann6();
  const auto [stem, dim] = split_dim_suffix(
      name, name.rfind("griewank", 0) == 0 ? 8 : name == "levy" ? 4 : 5);
  if (dim < 1)
    throw std::invalid_argument("make_synthetic: bad dimension in " + name);
  if (stem == "levy") return make_levy(dim);
  if (stem == "ackley") return make_ackley(dim);
  if (stem == "michalewicz") return make_michalewicz(dim);
  if (stem == "griewank") return make_griewank(dim);
  throw std::invalid_argument("make_synthetic: unknown benchmark " + name);
}

Benchmark make_gp_sample(int dim, double lengthscale, std::uint64_t seed,
                         Eigen::Index n_features) {
  if (dim < 1)
    throw std::invalid_argument("make_gp_sample: dim must be >= 1");
  if (!(lengthscale > 0.0))
    throw std::invalid_argument("make_gp_sample: lengthscale must be > 0");
  RngStream rng = RngStream::keyed(seed, stream_purpose::kBenchmark);
  const Eigen::VectorXd ell = Eigen::VectorXd::Constant(dim, lengthscale);
  const MaternFeatureMap map =
      make_matern52_features(ell, 1.0, n_features, rng);
  const Eigen::VectorXd weights = rng.normal_vector(n_features);

  std::string name = "gp" + std::to_string(dim) + "-l";
  {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", lengthscale);
    name += buf;
  }
  name += "-s" + std::to_string(seed);

  auto fn = [map, weights](const Eigen::VectorXd& x) {
    return map.features(x).dot(weights);
  };
  return Benchmark(std::move(name), unit_box(dim), fn, std::nullopt);
}

Benchmark make_benchmark(const std::string& name) {
  static const std::regex gp_pattern(
      R"(^gp(\d+)-l([0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)(?:-s(\d+))?$)");
  std::smatch match;
  if (std::regex_match(name, match, gp_pattern)) {
    const int dim = std::stoi(match[1].str());
    const double lengthscale = std::stod(match[2].str());
    const std::uint64_t seed =
        match[3].matched ? std::stoull(match[3].str()) : 0ull;
    return make_gp_sample(dim, lengthscale, seed);
  }
  return make_synthetic(name);
}

std::vector<std::string> benchmark_names() {
  return {"branin",        "hartmann6",    "levy4",
          "ackley5",       "michalewicz5", "griewank8",
          "gp4-l0.25-s0"};
}

}  // namespace vesbo
