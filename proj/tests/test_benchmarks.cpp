#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "vesbo/benchmarks.hpp"
#include "vesbo/rng.hpp"

using namespace vesbo;

namespace {

// Certified maximizers in native box coordinates.
void check_attains_optimum(const Benchmark& bench, const Eigen::VectorXd& x,
                           double tol = 1e-8) {
  REQUIRE(bench.optimum().has_value());
  CHECK(bench.evaluate(x) ==
        doctest::Approx(*bench.optimum()).epsilon(tol));
}

// No evaluation may exceed a declared optimum.
void check_never_exceeds(const Benchmark& bench, int n = 4096) {
  REQUIRE(bench.optimum().has_value());
  const Eigen::MatrixXd pts = sobol_points(n, bench.dim());
  for (int i = 0; i < n; ++i) {
    const double v = bench.evaluate_unit(pts.row(i).transpose());
    CHECK(std::isfinite(v));
    CHECK(v <= *bench.optimum() + 1e-6);
  }
}

}  // namespace

TEST_CASE("branin attains its certified optimum at all three minimizers") {
  const Benchmark b = make_benchmark("branin");
  CHECK(b.dim() == 2);
  CHECK(*b.optimum() == doctest::Approx(-0.39788735772973816));
  CHECK(b.bounds()(0, 0) == -5.0);
  CHECK(b.bounds()(0, 1) == 10.0);
  CHECK(b.bounds()(1, 0) == 0.0);
  CHECK(b.bounds()(1, 1) == 15.0);

  check_attains_optimum(b, Eigen::Vector2d(-M_PI, 12.275), 1e-9);
  check_attains_optimum(b, Eigen::Vector2d(M_PI, 2.275), 1e-9);
  check_attains_optimum(b, Eigen::Vector2d(9.42478, 2.475), 1e-7);
  check_never_exceeds(b);
}

TEST_CASE("hartmann6 attains its certified optimum") {
  const Benchmark b = make_benchmark("hartmann6");
  CHECK(b.dim() == 6);
  CHECK(*b.optimum() == doctest::Approx(3.3223680114155094));
  Eigen::VectorXd x(6);
  x << 0.201689511, 0.150010695, 0.476873971, 0.275332432, 0.311651615,
      0.657300534;
  check_attains_optimum(b, x, 1e-9);
  check_never_exceeds(b);
}

TEST_CASE("levy defaults to four dimensions with optimum at the ones vector") {
  const Benchmark b = make_benchmark("levy4");
  CHECK(b.dim() == 4);
  CHECK(*b.optimum() == 0.0);
  CHECK(b.bounds()(0, 0) == -10.0);
  CHECK(b.bounds()(3, 1) == 10.0);
  check_attains_optimum(b, Eigen::VectorXd::Constant(4, 1.0), 1e-12);
  check_never_exceeds(b);

  const Benchmark wide = make_synthetic("levy7");
  CHECK(wide.dim() == 7);
  check_attains_optimum(wide, Eigen::VectorXd::Constant(7, 1.0), 1e-12);
}

TEST_CASE("ackley and griewank peak at the origin") {
  const Benchmark a = make_benchmark("ackley5");
  CHECK(a.dim() == 5);
  CHECK(a.bounds()(0, 1) == doctest::Approx(32.768));
  CHECK(a.evaluate(Eigen::VectorXd::Zero(5)) ==
        doctest::Approx(0.0).epsilon(1e-12));
  check_never_exceeds(a);

  const Benchmark g = make_benchmark("griewank8");
  CHECK(g.dim() == 8);
  CHECK(g.bounds()(0, 0) == -600.0);
  CHECK(g.evaluate(Eigen::VectorXd::Zero(8)) == 0.0);
  check_never_exceeds(g);

  // Dimension suffixes are honored.
  CHECK(make_synthetic("ackley7").dim() == 7);
  CHECK(make_synthetic("griewank3").dim() == 3);
}

TEST_CASE("michalewicz exposes certified optima for d = 2 and d = 5") {
  const Benchmark m2 = make_benchmark("michalewicz2");
  REQUIRE(m2.optimum().has_value());
  CHECK(*m2.optimum() == doctest::Approx(1.8013034100985534));
  check_attains_optimum(m2, Eigen::Vector2d(2.20290552, 1.57079633), 1e-7);
  check_never_exceeds(m2);

  const Benchmark m5 = make_benchmark("michalewicz5");
  REQUIRE(m5.optimum().has_value());
  CHECK(*m5.optimum() == doctest::Approx(4.687658179088111));
  Eigen::VectorXd x5(5);
  x5 << 2.20290551, 1.57079633, 1.28499157, 1.92305847, 1.72046977;
  check_attains_optimum(m5, x5, 1e-7);
  check_never_exceeds(m5);

  // Other dimensions run fine but carry no certificate.
  CHECK_FALSE(make_synthetic("michalewicz3").optimum().has_value());
}

TEST_CASE("evaluate_unit maps the cube onto the box") {
  const Benchmark b = make_benchmark("branin");
  const Eigen::Vector2d mid(0.5, 0.5);
  // Center of [-5,10] x [0,15] is (2.5, 7.5).
  CHECK(b.to_box(mid)[0] == doctest::Approx(2.5));
  CHECK(b.to_box(mid)[1] == doctest::Approx(7.5));
  CHECK(b.evaluate_unit(mid) ==
        doctest::Approx(b.evaluate(Eigen::Vector2d(2.5, 7.5))));

  CHECK_THROWS_AS(b.evaluate_unit(Eigen::Vector2d(1.5, 0.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(b.evaluate(Eigen::Vector3d::Zero()),
                  std::invalid_argument);
}

TEST_CASE("gp prior draws are reproducible and lengthscale-sensitive") {
  const Benchmark f1 = make_gp_sample(2, 0.5, 11);
  const Benchmark f2 = make_gp_sample(2, 0.5, 11);
  const Benchmark f3 = make_gp_sample(2, 0.5, 12);
  CHECK_FALSE(f1.optimum().has_value());

  RngStream rng(3);
  bool any_diff = false;
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd u = rng.uniform_vector(2);
    CHECK(f1.evaluate_unit(u) == f2.evaluate_unit(u));
    any_diff = any_diff || f1.evaluate_unit(u) != f3.evaluate_unit(u);
  }
  CHECK(any_diff);

  // Unit prior variance: empirical standard deviation near 1.
  const Eigen::MatrixXd pts = sobol_points(10000, 2);
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double v = f1.evaluate_unit(pts.row(i).transpose());
    sum += v;
    sum_sq += v * v;
  }
  // A single draw's spatial sd on a domain only two lengthscales wide is
  // itself random with wide spread; bound it loosely around the unit prior sd.
  const double mean = sum / 10000.0;
  const double sd = std::sqrt(sum_sq / 10000.0 - mean * mean);
  CHECK(sd > 0.3);
  CHECK(sd < 1.8);

  // Shorter lengthscales produce rougher draws.
  const Benchmark rough = make_gp_sample(2, 0.05, 11);
  const Benchmark smooth = make_gp_sample(2, 0.5, 11);
  double rough_slope = 0.0, smooth_slope = 0.0;
  RngStream pair_rng(7);
  for (int i = 0; i < 200; ++i) {
    const Eigen::VectorXd u = pair_rng.uniform_vector(2) * 0.98;
    const Eigen::VectorXd v = u + Eigen::VectorXd::Constant(2, 0.01);
    rough_slope += std::abs(rough.evaluate_unit(u) - rough.evaluate_unit(v));
    smooth_slope +=
        std::abs(smooth.evaluate_unit(u) - smooth.evaluate_unit(v));
  }
  CHECK(rough_slope > smooth_slope);
}

TEST_CASE("gp benchmark names parse dimension, lengthscale and seed") {
  const Benchmark b = make_benchmark("gp3-l0.25-s9");
  CHECK(b.dim() == 3);
  CHECK(b.name() == "gp3-l0.25-s9");
  // Equivalent to the direct constructor.
  const Benchmark direct = make_gp_sample(3, 0.25, 9);
  Eigen::VectorXd u(3);
  u << 0.2, 0.6, 0.9;
  CHECK(b.evaluate_unit(u) == direct.evaluate_unit(u));

  // Seed defaults to zero when omitted.
  const Benchmark unseeded = make_benchmark("gp2-l0.5");
  CHECK(unseeded.evaluate_unit(Eigen::Vector2d(0.3, 0.4)) ==
        make_gp_sample(2, 0.5, 0).evaluate_unit(Eigen::Vector2d(0.3, 0.4)));

  CHECK_THROWS_AS(make_benchmark("gp0-l0.5"), std::invalid_argument);
  CHECK_THROWS_AS(make_gp_sample(2, -0.1, 0), std::invalid_argument);
}

TEST_CASE("every registry entry evaluates finitely") {
  for (const std::string& name : benchmark_names()) {
    const Benchmark b = make_benchmark(name);
    CHECK(b.name() == name);
    const Eigen::MatrixXd pts = sobol_points(1000, b.dim());
    for (int i = 0; i < 1000; ++i)
      CHECK(std::isfinite(b.evaluate_unit(pts.row(i).transpose())));
  }
}

TEST_CASE("unknown names are rejected") {
  CHECK_THROWS_AS(make_benchmark("rover"), std::invalid_argument);
  CHECK_THROWS_AS(make_benchmark("levy0"), std::invalid_argument);
  CHECK_THROWS_AS(make_synthetic("hartmann4"), std::invalid_argument);
}
