#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace robvar {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

//!< Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//!< Non-finite or out-of-domain numeric input.
class DomainError : public Error {
 public:
  using Error::Error;
};

//!< Mismatched vector/matrix dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

//!< A generator parameterization that violates its stability criterion.
class StabilityError : public Error {
 public:
  StabilityError(const std::string& what, double radius)
      : Error(what), radius_(radius) {}
  double radius() const { return radius_; }

 private:
  double radius_;
};

//!< Optimizer iterate became non-finite.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long iteration)
      : Error(what), iteration_(iteration) {}
  long iteration() const { return iteration_; }

 private:
  long iteration_;
};

//!< A simulated path left the finite range.
class ExplosivePathError : public Error {
 public:
  ExplosivePathError(const std::string& what, long step)
      : Error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string(what) + ": non-finite value");
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (!m.allFinite()) throw DomainError(std::string(what) + ": non-finite entry");
}

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;
inline constexpr const char* kRngAlgorithm = "mt19937_64/splitmix64/libstdc++-distributions";

/// SplitMix64 finalizer; a bijection on 64-bit words.
inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += kGoldenGamma;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed splitting rule: seed XOR (index * golden-ratio constant).
/// Index 0 maps a seed to itself.
inline constexpr std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index) {
  return seed ^ (index * kGoldenGamma);
}

/// Substream key for nested indices; mixes so that (a, b) and (b, a) differ.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(split_seed(seed, index + 1));
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) { return Engine(splitmix64(seed)); }

}  // namespace robvar
