#pragma once

// VAR(d) structure: companion form, stability, column-wise regression split,
// theory-driven tuning level, full transition-matrix estimation and error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "robvar/core.hpp"
#include "robvar/optimizer.hpp"
#include "robvar/parallel.hpp"
#include "robvar/penalty.hpp"
#include "robvar/robust_loss.hpp"

namespace robvar {

/// Observations Z_0..Z_T, one row per time point.
class TimeSeriesMatrix {
 public:
  TimeSeriesMatrix() = default;
  explicit TimeSeriesMatrix(Matrix values) : values_(std::move(values)) {}

  Index rows() const { return values_.rows(); }
  Index p() const { return values_.cols(); }
  const Matrix& values() const { return values_; }
  Matrix& values() { return values_; }
  auto row(Index t) const { return values_.row(t); }

 private:
  Matrix values_;
};

/// Z_t = B_1' Z_{t-1} + ... + B_d' Z_{t-d} + eps_t.
class VarModel {
 public:
  VarModel() = default;
  explicit VarModel(std::vector<Matrix> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) throw ShapeError("VarModel: need at least one lag");
    const Index p = coeffs_.front().rows();
    for (std::size_t k = 0; k < coeffs_.size(); ++k) {
      if (coeffs_[k].rows() != p || coeffs_[k].cols() != p)
        throw ShapeError("VarModel: coefficient " + std::to_string(k + 1) + " is not " + std::to_string(p) + "x" +
                         std::to_string(p));
      require_finite(coeffs_[k], "VarModel coefficient");
    }
  }
  explicit VarModel(Matrix b1) : VarModel(std::vector<Matrix>{std::move(b1)}) {}

  /// Inverse of stacked(): rows k*p..(k+1)*p-1 hold B_{k+1}.
  static VarModel from_stacked(const Matrix& stacked, Index p) {
    if (p < 1 || stacked.cols() != p || stacked.rows() % p != 0)
      throw ShapeError("VarModel::from_stacked: expected a (p*d) x p matrix");
    std::vector<Matrix> coeffs;
    for (Index k = 0; k < stacked.rows() / p; ++k) coeffs.push_back(stacked.block(k * p, 0, p, p));
    return VarModel(std::move(coeffs));
  }

  Index p() const { return coeffs_.empty() ? 0 : coeffs_.front().rows(); }
  Index d() const { return static_cast<Index>(coeffs_.size()); }
  const std::vector<Matrix>& coeffs() const { return coeffs_; }
  const Matrix& coeff(Index k) const { return coeffs_.at(static_cast<std::size_t>(k)); }

  /// B = [B_1; ...; B_d], (p*d) x p. Column j is the true parameter of the
  /// j-th column regression.
  Matrix stacked() const {
    Matrix s(p() * d(), p());
    for (Index k = 0; k < d(); ++k) s.block(k * p(), 0, p(), p()) = coeffs_[static_cast<std::size_t>(k)];
    return s;
  }

 private:
  std::vector<Matrix> coeffs_;
};

/// Top block row [B_1' ... B_d'], identity blocks on the subdiagonal.
inline Matrix companion_matrix(const VarModel& model) {
  const Index p = model.p();
  const Index d = model.d();
  Matrix c = Matrix::Zero(p * d, p * d);
  for (Index k = 0; k < d; ++k) c.block(0, k * p, p, p) = model.coeff(k).transpose();
  for (Index k = 1; k < d; ++k) c.block(k * p, (k - 1) * p, p, p).setIdentity();
  return c;
}

inline double spectral_radius(const Matrix& a) {
  if (a.rows() != a.cols()) throw ShapeError("spectral_radius: matrix must be square");
  require_finite(a, "spectral_radius");
  if (a.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es;
  const Index max_iter = 40 * a.rows();
  es.setMaxIterations(max_iter);
  es.compute(a, false);
  if (es.info() != Eigen::Success)
    throw Error("spectral_radius: eigenvalue iteration did not converge within " + std::to_string(max_iter) +
                " iterations");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// True when the directed graph of the nonzero pattern (edge i->j iff
/// a(i,j) != 0) has no cycle; every such matrix is nilpotent.
inline bool structurally_nilpotent(const Matrix& a) {
  const Index n = a.rows();
  std::vector<int> indegree(static_cast<std::size_t>(n), 0);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (a(i, j) != 0.0) ++indegree[static_cast<std::size_t>(j)];
  std::vector<Index> ready;
  for (Index j = 0; j < n; ++j)
    if (indegree[static_cast<std::size_t>(j)] == 0) ready.push_back(j);
  Index removed = 0;
  while (!ready.empty()) {
    const Index i = ready.back();
    ready.pop_back();
    ++removed;
    for (Index j = 0; j < n; ++j)
      if (a(i, j) != 0.0 && --indegree[static_cast<std::size_t>(j)] == 0) ready.push_back(j);
  }
  return removed == n;
}

inline Matrix rescale_to_radius(const Matrix& a, double rho_target) {
  if (!(rho_target > 0.0)) throw DomainError("rescale_to_radius: target radius must be positive");
  if (structurally_nilpotent(a)) throw DomainError("rescale_to_radius: matrix is nilpotent (zero spectral radius)");
  const double rho = spectral_radius(a);
  if (!(rho > 1e-12)) throw DomainError("rescale_to_radius: spectral radius is zero");
  return a * (rho_target / rho);
}

/// The p column regressions of a VAR(d) fit. All share one predictor matrix.
struct VarRegressions {
  std::shared_ptr<const Matrix> x;
  std::vector<Regression> columns;
};

/// Rows x_t = (Z_{t-1}', ..., Z_{t-d}') for t = d..T, responses y^(j)_t = Z_{t,j}.
inline VarRegressions decompose_regressions(const TimeSeriesMatrix& data, Index d) {
  if (d < 1) throw DomainError("decompose_regressions: lag must be at least 1");
  const Index p = data.p();
  if (p < 1) throw ShapeError("decompose_regressions: data has no columns");
  if (data.rows() < d + 1)
    throw ShapeError("decompose_regressions: need at least " + std::to_string(d + 1) + " rows for lag " +
                     std::to_string(d) + ", got " + std::to_string(data.rows()));
  const Index n = data.rows() - d;
  Matrix x(n, p * d);
  for (Index i = 0; i < n; ++i) {
    const Index t = i + d;
    for (Index k = 1; k <= d; ++k) x.block(i, (k - 1) * p, 1, p) = data.row(t - k);
  }
  VarRegressions out;
  out.x = std::make_shared<const Matrix>(std::move(x));
  out.columns.reserve(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) out.columns.emplace_back(data.values().col(j).tail(n), out.x);
  return out;
}

/// lambda_n = c * b_M * tau * sqrt(log(p*d) / n); c absorbs the width and
/// compatibility constants.
inline double theory_lambda(Index p, Index d, Index n, const RobustConfig& cfg, double c) {
  if (n < 2) throw DomainError("theory_lambda: n must be at least 2");
  if (p * d < 2) throw DomainError("theory_lambda: p*d must be at least 2");
  if (!(c > 0.0)) throw DomainError("theory_lambda: c must be positive");
  return c * cfg.b_m() * cfg.tau() *
         std::sqrt(std::log(static_cast<double>(p * d)) / static_cast<double>(n));
}

struct ExplicitLambda {
  double lambda;
};
struct TheoryLambda {
  double c = 1.0;
};
using LambdaMode = std::variant<ExplicitLambda, TheoryLambda>;

struct FitConfig {
  RobustConfig robust{};
  Penalty penalty = Penalty::l1();
  LambdaMode lambda_mode = TheoryLambda{1.0};
  OptimizerConfig opt{};

  double resolve_lambda(Index p, Index d, Index n) const {
    if (const auto* e = std::get_if<ExplicitLambda>(&lambda_mode)) {
      if (!(e->lambda >= 0.0)) throw DomainError("FitConfig: explicit lambda must be >= 0");
      return e->lambda;
    }
    return theory_lambda(p, d, n, robust, std::get<TheoryLambda>(lambda_mode).c);
  }
};

struct VarFit {
  VarModel model;
  std::vector<FitResult> columns;
  double lambda = 0.0;
  Index n = 0;

  long max_iterations() const {
    long m = 0;
    for (const auto& c : columns) m = std::max(m, c.iterations);
    return m;
  }
  bool converged() const {
    for (const auto& c : columns)
      if (!c.converged) return false;
    return true;
  }
};

/// Column j is fitted with seed split_seed(opt.seed, j), so results do not
/// depend on the order or thread in which columns run.
inline VarFit fit_var(const TimeSeriesMatrix& data, Index d, const FitConfig& fit, unsigned workers = 1) {
  const VarRegressions regs = decompose_regressions(data, d);
  const Index p = data.p();
  const Index n = regs.x->rows();
  VarFit out;
  out.lambda = fit.resolve_lambda(p, d, n);
  out.n = n;
  out.columns.resize(static_cast<std::size_t>(p));
  const auto weights = std::make_shared<const Vector>(mallows_weights(*regs.x, fit.robust));
  parallel_for(static_cast<std::size_t>(p), workers, [&](std::size_t j) {
    OptimizerConfig opt = fit.opt;
    opt.seed = split_seed(fit.opt.seed, j);
    const RobustProblem problem(regs.columns[j], fit.robust, weights);
    try {
      out.columns[j] = proximal_gradient_fit(problem, fit.penalty, out.lambda, opt);
    } catch (const DivergenceError& e) {
      throw DivergenceError("column " + std::to_string(j) + ": " + e.what(), e.iteration());
    } catch (const Error& e) {
      throw Error("column " + std::to_string(j) + ": " + e.what());
    }
  });
  Matrix stacked(p * d, p);
  for (Index j = 0; j < p; ++j) stacked.col(j) = out.columns[static_cast<std::size_t>(j)].beta_hat;
  out.model = VarModel::from_stacked(stacked, p);
  return out;
}

/// max_j ||B_hat_j - B_j||_2 over the columns of the stacked coefficients.
inline double estimation_error(const VarModel& b_hat, const VarModel& b_true) {
  if (b_hat.p() != b_true.p() || b_hat.d() != b_true.d())
    throw ShapeError("estimation_error: models differ in shape");
  const Matrix diff = b_hat.stacked() - b_true.stacked();
  double m = 0.0;
  for (Index j = 0; j < diff.cols(); ++j) m = std::max(m, diff.col(j).norm());
  return m;
}

}  // namespace robvar
