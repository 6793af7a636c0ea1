#pragma once

// Empirical checks of the two conditions behind the error bounds:
//   deviation: R*(grad L_n(beta*)) <= lambda / 2
//   restricted curvature: L_n(beta*+u) - L_n(beta*) - grad' u >= alpha ||u||^2
// evaluated on data with a known beta*.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "robvar/core.hpp"
#include "robvar/penalty.hpp"
#include "robvar/robust_loss.hpp"

namespace robvar {

struct DeviationResult {
  double deviation_stat = 0.0;
  double lambda_half = 0.0;
  bool pass = false;
};

struct ReResult {
  double re_hat = std::numeric_limits<double>::infinity();
  Index directions = 0;
  Vector min_direction;
};

struct DiagnosticsReport {
  double deviation_stat = 0.0;
  double lambda_half = 0.0;
  bool deviation_pass = false;
  double re_hat = 0.0;
  Index re_directions = 0;
  Vector min_direction;
};

inline DeviationResult deviation_check(const RobustProblem& problem, const Vector& beta_star, const Penalty& pen,
                                       double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("deviation_check: lambda must be >= 0");
  DeviationResult r;
  r.deviation_stat = dual_value(pen, problem.gradient(beta_star));
  r.lambda_half = 0.5 * lambda;
  r.pass = r.deviation_stat <= r.lambda_half;
  return r;
}

inline DeviationResult deviation_check(const Regression& reg, const Vector& beta_star, const RobustConfig& cfg,
                                       const Penalty& pen, double lambda) {
  return deviation_check(RobustProblem(reg, cfg), beta_star, pen, lambda);
}

/// Default probe radius tau / (2 b_M).
inline double default_re_radius(const RobustConfig& cfg) { return cfg.tau() / (2.0 * cfg.b_m()); }

/// Taylor remainder ratio [L(b+u) - L(b) - grad(b)'u] / ||u||^2.
inline double taylor_ratio(const RobustProblem& problem, const Vector& beta, double base_value,
                           const Vector& base_grad, const Vector& u) {
  const double rem = problem.objective(beta + u) - base_value - base_grad.dot(u);
  return rem / u.squaredNorm();
}

/// Random s-sparse unit probe directions (support uniform without
/// replacement, Gaussian entries), scaled to `radius`.
inline std::vector<Vector> sparse_probe_directions(Index q, Index sparsity, Index count, double radius,
                                                   std::uint64_t seed) {
  if (sparsity < 1 || sparsity > q) throw DomainError("re_check: sparsity must be in [1, q]");
  Engine eng = make_engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Index> idx(static_cast<std::size_t>(q));
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(count));
  while (static_cast<Index>(out.size()) < count) {
    std::iota(idx.begin(), idx.end(), Index{0});
    // partial Fisher-Yates
    for (Index k = 0; k < sparsity; ++k) {
      std::uniform_int_distribution<Index> pick(k, q - 1);
      std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick(eng))]);
    }
    Vector u = Vector::Zero(q);
    for (Index k = 0; k < sparsity; ++k) u(idx[static_cast<std::size_t>(k)]) = normal(eng);
    const double norm = u.norm();
    if (norm == 0.0) continue;
    out.push_back(u * (radius / norm));
  }
  return out;
}

/// Minimum Taylor-remainder ratio over the probes and their negations.
inline ReResult re_check(const RobustProblem& problem, const Vector& beta_star, double radius, Index n_directions,
                         Index sparsity, std::uint64_t seed) {
  if (!(radius > 0.0)) throw DomainError("re_check: radius must be positive");
  if (n_directions < 1) throw DomainError("re_check: need at least one direction");
  if (beta_star.size() != problem.regression().q()) throw ShapeError("re_check: beta_star length mismatch");
  const double base = problem.objective(beta_star);
  const Vector grad = problem.gradient(beta_star);
  ReResult r;
  r.directions = n_directions;
  for (const Vector& u : sparse_probe_directions(beta_star.size(), sparsity, n_directions, radius, seed)) {
    for (const double sign : {1.0, -1.0}) {
      const Vector v = sign * u;
      const double ratio = taylor_ratio(problem, beta_star, base, grad, v);
      if (ratio < r.re_hat) {
        r.re_hat = ratio;
        r.min_direction = v;
      }
    }
  }
  return r;
}

inline ReResult re_check(const Regression& reg, const Vector& beta_star, const RobustConfig& cfg, double radius,
                         Index n_directions, Index sparsity, std::uint64_t seed) {
  return re_check(RobustProblem(reg, cfg), beta_star, radius, n_directions, sparsity, seed);
}

}  // namespace robvar
