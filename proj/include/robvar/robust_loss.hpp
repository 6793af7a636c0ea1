#pragma once

// Huber loss with Mallows-weighted predictors: the robust empirical objective
//   L_n(beta) = (1/n) sum_i w(x_i) * huber(w(x_i) * (y_i - x_i' beta))
// and its gradient, for a single stochastic regression y = X beta + eps.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "robvar/core.hpp"

namespace robvar {

enum class WeightForm { linear, quadratic };

class RobustConfig {
 public:
  /// An empty shrinkage matrix stands for the identity of whatever size the
  /// predictors have.
  explicit RobustConfig(double tau = 1.0, double b = 3.0, Matrix shrinkage = {},
                        WeightForm form = WeightForm::linear)
      : tau_(tau), b_(b), shrinkage_(std::move(shrinkage)), form_(form) {
    if (!(tau_ > 0.0) || !std::isfinite(tau_)) throw DomainError("RobustConfig: tau must be positive and finite");
    if (!(b_ > 0.0) || !std::isfinite(b_)) throw DomainError("RobustConfig: b must be positive and finite");
    if (shrinkage_.size() > 0) {
      if (shrinkage_.rows() != shrinkage_.cols()) throw ShapeError("RobustConfig: shrinkage matrix must be square");
      require_finite(shrinkage_, "RobustConfig shrinkage");
      if (!shrinkage_.isApprox(shrinkage_.transpose(), 1e-12))
        throw DomainError("RobustConfig: shrinkage matrix must be symmetric");
      Eigen::SelfAdjointEigenSolver<Matrix> es(shrinkage_, Eigen::EigenvaluesOnly);
      lambda_min_ = es.eigenvalues().minCoeff();
      if (!(lambda_min_ > 0.0)) throw DomainError("RobustConfig: shrinkage matrix must be positive definite");
    }
  }

  double tau() const { return tau_; }
  double b() const { return b_; }
  WeightForm weight_form() const { return form_; }
  bool identity_shrinkage() const { return shrinkage_.size() == 0; }
  const Matrix& shrinkage() const { return shrinkage_; }
  double shrinkage_lambda_min() const { return lambda_min_; }
  /// Mallows parameter b_M = b / lambda_min(B_M).
  double b_m() const { return b_ / lambda_min_; }

 private:
  double tau_;
  double b_;
  Matrix shrinkage_;
  WeightForm form_;
  double lambda_min_ = 1.0;
};

/// One stochastic regression. The predictor matrix is held by shared pointer
/// so that the p column regressions of a VAR fit alias a single X.
class Regression {
 public:
  Regression(Vector y, std::shared_ptr<const Matrix> x) : y_(std::move(y)), x_(std::move(x)) {
    if (!x_) throw ShapeError("Regression: null predictor matrix");
    if (y_.size() != x_->rows())
      throw ShapeError("Regression: y has " + std::to_string(y_.size()) + " rows but x has " +
                       std::to_string(x_->rows()));
    if (y_.size() < 1) throw ShapeError("Regression: empty regression");
    require_finite(y_, "Regression y");
    require_finite(*x_, "Regression x");
  }
  Regression(Vector y, Matrix x) : Regression(std::move(y), std::make_shared<const Matrix>(std::move(x))) {}

  Index n() const { return y_.size(); }
  Index q() const { return x_->cols(); }
  const Vector& y() const { return y_; }
  const Matrix& x() const { return *x_; }
  const std::shared_ptr<const Matrix>& x_ptr() const { return x_; }

 private:
  Vector y_;
  std::shared_ptr<const Matrix> x_;
};

inline double huber_value(double u, double tau) {
  require_finite(u, "huber_value");
  if (!(tau > 0.0)) throw DomainError("huber_value: tau must be positive");
  const double a = std::abs(u);
  return a <= tau ? 0.5 * u * u : tau * a - 0.5 * tau * tau;
}

/// Clip of u to [-tau, tau]; exact at |u| = tau since the derivative is continuous.
inline double huber_derivative(double u, double tau) {
  require_finite(u, "huber_derivative");
  if (!(tau > 0.0)) throw DomainError("huber_derivative: tau must be positive");
  return std::clamp(u, -tau, tau);
}

namespace detail {

inline double shrunk_norm(const Eigen::Ref<const Vector>& x, const RobustConfig& cfg) {
  if (cfg.identity_shrinkage()) return x.norm();
  if (cfg.shrinkage().cols() != x.size())
    throw ShapeError("mallows_weight: shrinkage is " + std::to_string(cfg.shrinkage().cols()) +
                     "-dimensional but x has length " + std::to_string(x.size()));
  return (cfg.shrinkage() * x).norm();
}

}  // namespace detail

/// Mallows weight min(1, b/||B_M x||) (linear) or min(1, b^2/||B_M x||^2)
/// (quadratic); 1 at ||B_M x|| = 0.
inline double mallows_weight(const Eigen::Ref<const Vector>& x, const RobustConfig& cfg) {
  require_finite(x, "mallows_weight");
  const double norm = detail::shrunk_norm(x, cfg);
  if (norm == 0.0) return 1.0;
  const double ratio = cfg.b() / norm;
  if (cfg.weight_form() == WeightForm::linear) return std::min(1.0, ratio);
  return std::min(1.0, ratio * ratio);
}

inline Vector mallows_weights(const Matrix& x, const RobustConfig& cfg) {
  Vector w(x.rows());
  for (Index i = 0; i < x.rows(); ++i) w(i) = mallows_weight(x.row(i).transpose(), cfg);
  return w;
}

/// A regression bound to a robust configuration, with the Mallows weights
/// computed once. Weights depend only on x, so they are fixed for the whole
/// optimization and shared read-only afterwards.
class RobustProblem {
 public:
  RobustProblem(const Regression& reg, const RobustConfig& cfg)
      : RobustProblem(reg, cfg, std::make_shared<const Vector>(mallows_weights(reg.x(), cfg))) {}

  RobustProblem(const Regression& reg, const RobustConfig& cfg, std::shared_ptr<const Vector> weights)
      : reg_(reg), cfg_(cfg), w_(std::move(weights)) {
    if (w_->size() != reg.n()) throw ShapeError("RobustProblem: weight vector length mismatch");
  }

  const Regression& regression() const { return reg_; }
  const RobustConfig& config() const { return cfg_; }
  const Vector& weights() const { return *w_; }
  const std::shared_ptr<const Vector>& weights_ptr() const { return w_; }

  double objective(const Vector& beta) const {
    check_beta(beta);
    const Matrix& x = reg_.x();
    const Vector& y = reg_.y();
    const Vector& w = *w_;
    const double tau = cfg_.tau();
    long double acc = 0.0L;
    for (Index i = 0; i < reg_.n(); ++i) {
      const double r = residual(x, y, beta, i);
      acc += static_cast<long double>(w(i)) * huber_value(w(i) * r, tau);
    }
    return static_cast<double>(acc / static_cast<long double>(reg_.n()));
  }

  Vector gradient(const Vector& beta) const {
    check_beta(beta);
    const Matrix& x = reg_.x();
    const Vector& y = reg_.y();
    const Vector& w = *w_;
    const double tau = cfg_.tau();
    const Index q = reg_.q();
    std::vector<long double> acc(static_cast<std::size_t>(q), 0.0L);
    for (Index i = 0; i < reg_.n(); ++i) {
      const double r = residual(x, y, beta, i);
      const long double coef = static_cast<long double>(huber_derivative(w(i) * r, tau)) * w(i) * w(i);
      if (coef == 0.0L) continue;
      for (Index k = 0; k < q; ++k) acc[static_cast<std::size_t>(k)] += coef * x(i, k);
    }
    Vector g(q);
    const long double n = static_cast<long double>(reg_.n());
    for (Index k = 0; k < q; ++k) g(k) = static_cast<double>(-acc[static_cast<std::size_t>(k)] / n);
    return g;
  }

  /// Lipschitz bound for the gradient: lambda_max((1/n) sum_i w_i^3 x_i x_i').
  double lipschitz_bound() const {
    const Matrix& x = reg_.x();
    Matrix h = Matrix::Zero(reg_.q(), reg_.q());
    for (Index i = 0; i < reg_.n(); ++i) {
      const double w3 = (*w_)(i) * (*w_)(i) * (*w_)(i);
      h.selfadjointView<Eigen::Lower>().rankUpdate(x.row(i).transpose(), w3);
    }
    h /= static_cast<double>(reg_.n());
    Eigen::SelfAdjointEigenSolver<Matrix> es(h.selfadjointView<Eigen::Lower>(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
  }

 private:
  void check_beta(const Vector& beta) const {
    if (beta.size() != reg_.q())
      throw ShapeError("robust loss: beta has length " + std::to_string(beta.size()) + ", expected " +
                       std::to_string(reg_.q()));
  }

  static double residual(const Matrix& x, const Vector& y, const Vector& beta, Index i) {
    long double fit = 0.0L;
    for (Index k = 0; k < beta.size(); ++k) fit += static_cast<long double>(x(i, k)) * beta(k);
    return static_cast<double>(static_cast<long double>(y(i)) - fit);
  }

  Regression reg_;  // x is shared, so copies are cheap
  RobustConfig cfg_;
  std::shared_ptr<const Vector> w_;
};

inline double robust_objective(const Regression& reg, const Vector& beta, const RobustConfig& cfg) {
  return RobustProblem(reg, cfg).objective(beta);
}

inline Vector robust_gradient(const Regression& reg, const Vector& beta, const RobustConfig& cfg) {
  return RobustProblem(reg, cfg).gradient(beta);
}

}  // namespace robvar
