#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace vesbo {

// Counter-based pseudo-random stream built on the SplitMix64 mixer.
//
// Streams are cheap to construct and are meant to be derived on demand from
// a base seed plus a small tuple of key words (repeat index, purpose tag,
// iteration, ...).  Distinct key tuples give statistically independent
// streams, which keeps every consumer of randomness in the library
// reproducible without any shared-generator bookkeeping.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(mix_seed(seed)) {}

  // Derives an independent stream from a base seed and up to three key words.
  static RngStream keyed(std::uint64_t seed, std::uint64_t k0,
                         std::uint64_t k1 = 0, std::uint64_t k2 = 0);

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform();

  // Standard normal via Box-Muller (second draw of each pair is cached).
  double normal();

  // Chi-squared with `dof` degrees of freedom as a sum of squared normals.
  double chi_squared(int dof);

  Eigen::VectorXd uniform_vector(Eigen::Index n);
  Eigen::VectorXd normal_vector(Eigen::Index n);
  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);

 private:
  static std::uint64_t mix_seed(std::uint64_t seed);

  std::uint64_t state_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// Stream purpose tags.  Keeping these in one place avoids accidental key
// collisions between modules that derive streams from the same base seed.
namespace stream_purpose {
inline constexpr std::uint64_t kInitDesign = 1;
inline constexpr std::uint64_t kGpFit = 2;
inline constexpr std::uint64_t kPaths = 3;
inline constexpr std::uint64_t kMaxSearch = 4;
inline constexpr std::uint64_t kAcqOptimizer = 5;
inline constexpr std::uint64_t kDuplicateFallback = 6;
inline constexpr std::uint64_t kBenchmark = 7;
}  // namespace stream_purpose

// Generator for the Sobol low-discrepancy sequence (Joe-Kuo direction
// numbers, Gray-code order, first point at the origin).  Supports up to 64
// dimensions; `sobol_supported` reports the limit so callers can fall back
// to plain uniform sampling beyond it.
class SobolSequence {
 public:
  explicit SobolSequence(int dim);

  int dim() const { return dim_; }

  // Next point of the sequence in [0, 1)^d.
  Eigen::VectorXd next();

  // Next n points stacked row-wise (n x d).
  Eigen::MatrixXd take(Eigen::Index n);

 private:
  int dim_;
  std::uint64_t index_ = 0;
  Eigen::VectorXd point_;  // kept as floats of the current integer state
  std::vector<std::uint32_t> state_;
  std::vector<std::array<std::uint32_t, 32>> directions_;
};

bool sobol_supported(int dim);

// First n Sobol points, unrandomized (n x d).
Eigen::MatrixXd sobol_points(Eigen::Index n, int dim);

// Sobol points under a Cranley-Patterson rotation: a single uniform shift
// drawn from `rng` is added to every point modulo 1.  Different rotations
// give independent randomizations while preserving low discrepancy; the
// same stream state always yields the same matrix.  Dimensions beyond the
// Sobol table fall back to i.i.d. uniforms from `rng`.
Eigen::MatrixXd rotated_sobol(Eigen::Index n, int dim, RngStream& rng);

}  // namespace vesbo
