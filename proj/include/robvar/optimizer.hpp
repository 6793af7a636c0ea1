#pragma once

// Proximal gradient descent for L_n(beta) + lambda * R(beta):
//   beta <- prox_{lambda*step}(beta - step * grad L_n(beta))
// started from a random unit vector and stopped on ||beta_{t+1} - beta_t|| <= tol.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "robvar/core.hpp"
#include "robvar/penalty.hpp"
#include "robvar/robust_loss.hpp"

namespace robvar {

enum class StepMode {
  fixed,  //!< use OptimizerConfig::step as given
  safe,   //!< step = 0.99 / L, L the gradient Lipschitz bound of the instance
};

struct OptimizerConfig {
  double step = 0.9;
  double tol = 1e-4;
  long max_iter = 10000;
  std::uint64_t seed = 0;
  StepMode step_mode = StepMode::fixed;
  bool record_trace = false;

  void validate() const {
    if (!(step > 0.0) || !std::isfinite(step)) throw DomainError("OptimizerConfig: step must be positive");
    if (!(tol > 0.0)) throw DomainError("OptimizerConfig: tol must be positive");
    if (max_iter < 1) throw DomainError("OptimizerConfig: max_iter must be at least 1");
  }
};

struct FitResult {
  Vector beta_hat;
  long iterations = 0;
  double final_change = 0.0;
  double step_used = 0.0;
  std::vector<double> objective_trace;  //!< penalized objective after each iteration
  bool converged = false;
};

/// Coordinates iid Uniform(-1, 1), normalized to unit Euclidean norm.
inline Vector init_beta(Index q, std::uint64_t seed) {
  if (q < 1) throw DomainError("init_beta: q must be at least 1");
  Engine eng = make_engine(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Vector v(q);
  double norm = 0.0;
  // An all-zero draw has probability zero; redraw rather than divide by zero.
  while (norm == 0.0) {
    for (Index j = 0; j < q; ++j) v(j) = unif(eng);
    norm = v.norm();
  }
  return v / norm;
}

inline double penalized_objective(const RobustProblem& problem, const Penalty& pen, double lambda,
                                  const Vector& beta) {
  return problem.objective(beta) + lambda * penalty_value(pen, beta);
}

/// One proximal-gradient update.
inline Vector prox_gradient_step(const RobustProblem& problem, const Penalty& pen, double lambda, double step,
                                 const Vector& beta) {
  return prox(pen, beta - step * problem.gradient(beta), lambda * step);
}

inline FitResult proximal_gradient_fit(const RobustProblem& problem, const Penalty& pen, double lambda,
                                       const OptimizerConfig& opt) {
  opt.validate();
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("proximal_gradient_fit: lambda must be >= 0");
  const Index q = problem.regression().q();
  pen.check_coverage(q);

  FitResult result;
  result.step_used = opt.step;
  if (opt.step_mode == StepMode::safe) {
    const double lip = problem.lipschitz_bound();
    if (lip > 0.0) result.step_used = 0.99 / lip;
  }
  const double step = result.step_used;

  Vector beta = init_beta(q, opt.seed);
  for (long t = 1; t <= opt.max_iter; ++t) {
    const Vector forward = beta - step * problem.gradient(beta);
    Vector next = forward.allFinite() ? prox(pen, forward, lambda * step) : forward;
    if (!next.allFinite())
      throw DivergenceError("proximal_gradient_fit: non-finite iterate at iteration " + std::to_string(t) +
                                " (step " + std::to_string(step) + " too large?)",
                            t);
    result.final_change = (next - beta).norm();
    result.iterations = t;
    beta = std::move(next);
    if (opt.record_trace) result.objective_trace.push_back(penalized_objective(problem, pen, lambda, beta));
    if (result.final_change <= opt.tol) {
      result.converged = true;
      break;
    }
  }
  result.beta_hat = std::move(beta);
  return result;
}

inline FitResult proximal_gradient_fit(const Regression& reg, const RobustConfig& cfg, const Penalty& pen,
                                       double lambda, const OptimizerConfig& opt) {
  return proximal_gradient_fit(RobustProblem(reg, cfg), pen, lambda, opt);
}

}  // namespace robvar
