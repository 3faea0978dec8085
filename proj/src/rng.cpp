#include "vesbo/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace vesbo {

namespace {

#include "sobol_table.inc"

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer: bijective 64-bit mixer with full avalanche.
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t RngStream::mix_seed(std::uint64_t seed) {
  return mix64(seed + kGolden);
}

RngStream RngStream::keyed(std::uint64_t seed, std::uint64_t k0,
                           std::uint64_t k1, std::uint64_t k2) {
  // Hash-chain the key words into the state; mixing between words keeps
  // e.g. (1, 0) and (0, 1) from colliding.
  std::uint64_t s = mix64(seed + kGolden);
  s = mix64(s ^ (k0 + kGolden));
  s = mix64(s ^ (k1 + kGolden));
  s = mix64(s ^ (k2 + kGolden));
  RngStream out(0);
  out.state_ = s;
  return out;
}

std::uint64_t RngStream::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  // Box-Muller on u1 in (0, 1] so the log never sees zero.
  const double u1 =
      (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return radius * std::cos(angle);
}

double RngStream::chi_squared(int dof) {
  if (dof < 1) throw std::invalid_argument("chi_squared: dof must be >= 1");
  double sum = 0.0;
  for (int i = 0; i < dof; ++i) {
    const double z = normal();
    sum += z * z;
  }
  return sum;
}

Eigen::VectorXd RngStream::uniform_vector(Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform();
  return v;
}

Eigen::VectorXd RngStream::normal_vector(Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
  return v;
}

Eigen::MatrixXd RngStream::normal_matrix(Eigen::Index rows,
                                         Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
  return m;
}

bool sobol_supported(int dim) { return dim >= 1 && dim <= kSobolMaxDim; }

SobolSequence::SobolSequence(int dim) : dim_(dim) {
  if (!sobol_supported(dim))
    throw std::invalid_argument("SobolSequence: dimension out of range");
  directions_.resize(dim_);
  state_.assign(dim_, 0u);
  point_ = Eigen::VectorXd::Zero(dim_);

  for (int d = 0; d < dim_; ++d) {
    auto& v = directions_[d];
    if (d == 0) {
      // First dimension is van der Corput in base 2: all m_i = 1.
      for (int i = 0; i < 32; ++i) v[i] = 1u << (31 - i);
      continue;
    }
    const unsigned poly = kSobolPoly[d];
    int degree = 0;
    while ((poly >> (degree + 1)) != 0) ++degree;
    // Interior coefficient bits of the primitive polynomial
    // (drop the leading and trailing 1).
    const unsigned coeffs = (poly - (1u << degree) - 1u) >> 1;
    for (int i = 0; i < degree; ++i)
      v[i] = kSobolVinit[d][i] << (31 - i);
    for (int i = degree; i < 32; ++i) {
      v[i] = v[i - degree] ^ (v[i - degree] >> degree);
      for (int k = 1; k < degree; ++k)
        if ((coeffs >> (degree - 1 - k)) & 1u) v[i] ^= v[i - k];
    }
  }
}

Eigen::VectorXd SobolSequence::next() {
  if (index_ > 0) {
    // Gray-code update: flip the direction of the lowest zero bit of the
    // previous index.
    std::uint64_t c = index_ - 1;
    int bit = 0;
    while (c & 1u) {
      c >>= 1;
      ++bit;
    }
    for (int d = 0; d < dim_; ++d) state_[d] ^= directions_[d][bit];
    for (int d = 0; d < dim_; ++d)
      point_[d] = static_cast<double>(state_[d]) * 0x1.0p-32;
  }
  ++index_;
  return point_;
}

Eigen::MatrixXd SobolSequence::take(Eigen::Index n) {
  Eigen::MatrixXd out(n, dim_);
  for (Eigen::Index i = 0; i < n; ++i) out.row(i) = next().transpose();
  return out;
}

Eigen::MatrixXd sobol_points(Eigen::Index n, int dim) {
  SobolSequence seq(dim);
  return seq.take(n);
}

Eigen::MatrixXd rotated_sobol(Eigen::Index n, int dim, RngStream& rng) {
  if (!sobol_supported(dim)) {
    // Past the direction-number table: plain uniforms keep things working
    // in very high dimension, just without the discrepancy guarantee.
    Eigen::MatrixXd out(n, dim);
    for (Eigen::Index i = 0; i < n; ++i)
      out.row(i) = rng.uniform_vector(dim).transpose();
    return out;
  }
  const Eigen::VectorXd shift = rng.uniform_vector(dim);
  Eigen::MatrixXd out = sobol_points(n, dim);
  out.rowwise() += shift.transpose();
  // Wrap back onto [0, 1).
  out = out.array() - out.array().floor();
  return out;
}

}  // namespace vesbo
