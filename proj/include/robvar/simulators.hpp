#pragma once

// Seeded generators for heavy-tailed and heteroskedastic VAR processes.
//
// Every generator variant checks its stability criterion at construction and
// throws StabilityError (carrying the computed value) when it is >= 1.
// Paths start at Z_0 = 0, run burn_in + n steps, and keep the last n rows.
//
// Draw order per step, fixed so that paths are reproducible from the seed:
//   var_t, arch_var, bekk_var, threshold_var: p noise draws, coordinate order
//   univariate_arch: one noise draw
//   rc_var: p*p Gamma entries (row-major), then p noise draws

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "robvar/core.hpp"
#include "robvar/var_core.hpp"

namespace robvar {

// ---------------------------------------------------------------------------
// Noise
// ---------------------------------------------------------------------------

struct StudentT {
  double df;
};
struct Gaussian {
  double sd = 1.0;
};
struct ScaleMixture {
  std::vector<std::pair<double, double>> components;  //!< (weight, sd)
};

/// Per-coordinate iid noise law.
class NoiseSpec {
 public:
  using Kind = std::variant<StudentT, Gaussian, ScaleMixture>;

  NoiseSpec() : kind_(Gaussian{1.0}) {}
  NoiseSpec(StudentT t) : kind_(t) {
    if (!(t.df > 2.0) || !std::isfinite(t.df))
      throw DomainError("NoiseSpec: Student-t degrees of freedom must exceed 2, got " + std::to_string(t.df));
  }
  NoiseSpec(Gaussian g) : kind_(g) {
    if (!(g.sd >= 0.0) || !std::isfinite(g.sd)) throw DomainError("NoiseSpec: Gaussian sd must be >= 0");
  }
  NoiseSpec(ScaleMixture m) : kind_(std::move(m)) {
    const auto& comps = std::get<ScaleMixture>(kind_).components;
    if (comps.empty()) throw DomainError("NoiseSpec: scale mixture needs at least one component");
    double total = 0.0;
    for (const auto& [w, sd] : comps) {
      if (!(w > 0.0) || !(sd >= 0.0) || !std::isfinite(sd))
        throw DomainError("NoiseSpec: mixture weights must be positive and sds nonnegative");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("NoiseSpec: mixture weights must sum to 1");
  }

  const Kind& kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Stateful scalar sampler for one NoiseSpec. Student-t is drawn as
/// N(0,1) / sqrt(ChiSq(df)/df), which supports non-integer df.
class NoiseSampler {
 public:
  explicit NoiseSampler(NoiseSpec spec) : spec_(std::move(spec)) {
    if (const auto* t = std::get_if<StudentT>(&spec_.kind())) chisq_ = std::chi_squared_distribution<double>(t->df);
    if (const auto* m = std::get_if<ScaleMixture>(&spec_.kind())) {
      std::vector<double> w;
      for (const auto& c : m->components) w.push_back(c.first);
      pick_ = std::discrete_distribution<std::size_t>(w.begin(), w.end());
    }
  }

  double operator()(Engine& eng) {
    return std::visit(
        [&](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, StudentT>) {
            const double z = normal_(eng);
            const double v = chisq_(eng);
            return z / std::sqrt(v / k.df);
          } else if constexpr (std::is_same_v<K, Gaussian>) {
            return k.sd * normal_(eng);
          } else {
            const std::size_t c = pick_(eng);
            return k.components[c].second * normal_(eng);
          }
        },
        spec_.kind());
  }

 private:
  NoiseSpec spec_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::chi_squared_distribution<double> chisq_{1.0};
  std::discrete_distribution<std::size_t> pick_;
};

/// rows x cols iid draws, filled row by row.
inline Matrix sample_noise(const NoiseSpec& spec, Index rows, Index cols, Engine& eng) {
  NoiseSampler draw(spec);
  Matrix out(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) out(i, j) = draw(eng);
  return out;
}

// ---------------------------------------------------------------------------
// Threshold regions
// ---------------------------------------------------------------------------

/// A partition of R^p into `count` regions given by a membership oracle.
/// Custom oracles are accepted unchecked; simulation fails if a state lands
/// in zero or several regions.
struct Partition {
  std::size_t count = 0;
  std::function<bool(std::size_t, const Vector&)> contains;
  std::string description;

  /// Two half-spaces split on the sign of coordinate `coord`: region 0 is
  /// z_coord >= 0, region 1 is z_coord < 0.
  static Partition sign_of(Index coord) {
    Partition part;
    part.count = 2;
    part.contains = [coord](std::size_t k, const Vector& z) { return k == 0 ? z(coord) >= 0.0 : z(coord) < 0.0; };
    part.description = "sign(z" + std::to_string(coord + 1) + ")";
    return part;
  }

  /// Axis-aligned boxes: the product of half-open intervals cut at the given
  /// sorted thresholds on each listed coordinate.
  static Partition boxes(std::vector<std::pair<Index, std::vector<double>>> cuts) {
    std::size_t count = 1;
    for (auto& [coord, c] : cuts) {
      if (!std::is_sorted(c.begin(), c.end())) throw DomainError("Partition::boxes: cut points must be sorted");
      count *= c.size() + 1;
    }
    Partition part;
    part.count = count;
    part.contains = [cuts](std::size_t k, const Vector& z) {
      std::size_t index = 0;
      for (const auto& [coord, c] : cuts) {
        const auto bin = static_cast<std::size_t>(std::upper_bound(c.begin(), c.end(), z(coord)) - c.begin());
        index = index * (c.size() + 1) + bin;
      }
      return index == k;
    };
    part.description = "boxes";
    return part;
  }

  static Partition custom(std::size_t count, std::function<bool(std::size_t, const Vector&)> oracle) {
    Partition part;
    part.count = count;
    part.contains = std::move(oracle);
    part.description = "custom";
    return part;
  }
};

inline std::vector<bool> region_indicators(const Partition& part, const Vector& z) {
  std::vector<bool> hits(part.count);
  for (std::size_t k = 0; k < part.count; ++k) hits[k] = part.contains(k, z);
  return hits;
}

/// Index of the single region containing z.
inline std::size_t region_of(const Partition& part, const Vector& z) {
  std::size_t found = part.count;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < part.count; ++k)
    if (part.contains(k, z)) {
      found = k;
      ++hits;
    }
  if (hits != 1)
    throw DomainError("threshold regions: point falls in " + std::to_string(hits) + " regions, expected exactly 1");
  return found;
}

/// f(z) = (1(z in G_1) z', ..., 1(z in G_l) z')'.
inline Vector threshold_feature_map(const Partition& part, const Vector& z) {
  const std::size_t k = region_of(part, z);
  Vector f = Vector::Zero(static_cast<Index>(part.count) * z.size());
  f.segment(static_cast<Index>(k) * z.size(), z.size()) = z;
  return f;
}

// ---------------------------------------------------------------------------
// Generator variants
// ---------------------------------------------------------------------------

namespace detail {

inline void check_square(const Matrix& m, Index p, const char* what) {
  if (m.rows() != p || m.cols() != p) throw ShapeError(std::string(what) + ": expected a " + std::to_string(p) + "x" +
                                                       std::to_string(p) + " matrix");
  require_finite(m, what);
}

inline void check_symmetric_psd(const Matrix& m, const char* what, bool strict) {
  if (!m.isApprox(m.transpose(), 1e-12) && (m - m.transpose()).norm() > 1e-12)
    throw DomainError(std::string(what) + " must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double tol = 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (strict ? !(lo > 0.0) : lo < -tol)
    throw DomainError(std::string(what) + (strict ? " must be positive definite" : " must be positive semidefinite"));
}

inline void gate(const char* variant, double radius) {
  if (!(radius < 1.0)) {
    std::ostringstream os;
    os.precision(17);
    os << variant << ": stability criterion violated, radius = " << radius << " (must be < 1)";
    throw StabilityError(os.str(), radius);
  }
}

/// Symmetric PSD square root by eigendecomposition, eigenvalues clamped at 0.
inline Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// out(i) = sum_l b(l, i) * z(l), accumulated in index order.
inline Vector transpose_times(const Matrix& b, const Vector& z) {
  Vector out(b.cols());
  for (Index i = 0; i < b.cols(); ++i) {
    double acc = 0.0;
    for (Index l = 0; l < b.rows(); ++l) acc += b(l, i) * z(l);
    out(i) = acc;
  }
  return out;
}

}  // namespace detail

/// Baseline: Z_t = sum_k B_k' Z_{t-k} + eps_t, eps iid per coordinate.
class VarT {
 public:
  VarT(VarModel model, NoiseSpec noise) : model_(std::move(model)), noise_(std::move(noise)) {
    radius_ = stability_radius(model_);
    detail::gate("var_t", radius_);
  }
  /// rho(companion).
  static double stability_radius(const VarModel& model) { return spectral_radius(companion_matrix(model)); }

  const VarModel& model() const { return model_; }
  const NoiseSpec& noise() const { return noise_; }
  double radius() const { return radius_; }
  Index p() const { return model_.p(); }

 private:
  VarModel model_;
  NoiseSpec noise_;
  double radius_;
};

/// Z_t = B' Z_{t-1} + Sigma(Z_{t-1}) eta_t, Sigma(z) = diag[(f_j + z'F_j z)^{1/2}].
class ArchVar {
 public:
  ArchVar(Matrix b, Vector f, std::vector<Matrix> f_mats, NoiseSpec noise)
      : b_(std::move(b)), f_(std::move(f)), f_mats_(std::move(f_mats)), noise_(std::move(noise)) {
    const Index p = b_.rows();
    detail::check_square(b_, p, "arch_var B");
    if (f_.size() != p || static_cast<Index>(f_mats_.size()) != p)
      throw ShapeError("arch_var: need p intercepts f_j and p matrices F_j");
    for (Index j = 0; j < p; ++j) {
      if (!(f_(j) > 0.0)) throw DomainError("arch_var: intercepts f_j must be positive");
      detail::check_square(f_mats_[static_cast<std::size_t>(j)], p, "arch_var F_j");
      detail::check_symmetric_psd(f_mats_[static_cast<std::size_t>(j)], "arch_var F_j", false);
    }
    radius_ = stability_radius(b_, f_mats_);
    detail::gate("arch_var", radius_);
  }
  /// rho(B)^2 + max_j rho(F_j).
  static double stability_radius(const Matrix& b, const std::vector<Matrix>& f_mats) {
    const double rb = spectral_radius(b);
    double rf = 0.0;
    for (const auto& fj : f_mats) rf = std::max(rf, spectral_radius(fj));
    return rb * rb + rf;
  }

  Vector sigma_diag(const Vector& z) const {
    Vector s(z.size());
    for (Index j = 0; j < z.size(); ++j) {
      const double quad = z.dot(f_mats_[static_cast<std::size_t>(j)] * z);
      s(j) = std::sqrt(f_(j) + quad);
    }
    return s;
  }

  const Matrix& b() const { return b_; }
  const NoiseSpec& noise() const { return noise_; }
  double radius() const { return radius_; }
  Index p() const { return b_.rows(); }

 private:
  Matrix b_;
  Vector f_;
  std::vector<Matrix> f_mats_;
  NoiseSpec noise_;
  double radius_;
};

/// Univariate ARCH(p): z_t = sum_j b_j z_{t-j} + sigma(z_{t-1..t-p}) eta_t,
/// sigma(u) = sqrt(d_0 + sum_j d_j u_j^2).
///
/// Stability is the second-moment criterion on the stacked state
/// Z~_t = A Z~_{t-1} + e_1 sigma eta_t (A the companion matrix):
///   rho(A (x) A + vec(e_1 e_1') vec(diag(d_1..d_p))') < 1.
/// It equals b_1^2 + d_1 for p = 1 and rho(A)^2 when all d_j = 0.
class UnivariateArch {
 public:
  UnivariateArch(Vector b, double d0, Vector d, NoiseSpec noise = Gaussian{1.0})
      : b_(std::move(b)), d0_(d0), d_(std::move(d)), noise_(std::move(noise)) {
    if (b_.size() < 1) throw ShapeError("univariate_arch: need at least one AR coefficient");
    if (d_.size() != b_.size()) throw ShapeError("univariate_arch: need one d_j per lag");
    require_finite(b_, "univariate_arch b");
    if (!(d0_ > 0.0)) throw DomainError("univariate_arch: d_0 must be positive");
    if ((d_.array() < 0.0).any()) throw DomainError("univariate_arch: d_j must be nonnegative");
    radius_ = stability_radius(b_, d_);
    detail::gate("univariate_arch", radius_);
  }

  static Matrix companion(const Vector& b) {
    std::vector<Matrix> lags;
    for (Index j = 0; j < b.size(); ++j) lags.push_back(Matrix::Constant(1, 1, b(j)));
    return companion_matrix(VarModel(std::move(lags)));
  }

  static double stability_radius(const Vector& b, const Vector& d) {
    const Matrix a = companion(b);
    const Index p = a.rows();
    Matrix m = detail::kron(a, a);
    // vec(e_1 e_1') is the unit vector at vec index 0; vec(diag d) hits
    // indices j*p + j.
    for (Index j = 0; j < p; ++j) m(0, j * p + j) += d(j);
    return spectral_radius(m);
  }

  double sigma(const Vector& lags) const {
    long double s = d0_;
    for (Index j = 0; j < d_.size(); ++j) s += static_cast<long double>(d_(j)) * lags(j) * lags(j);
    return std::sqrt(static_cast<double>(s));
  }

  const Vector& b() const { return b_; }
  const NoiseSpec& noise() const { return noise_; }
  double radius() const { return radius_; }
  Index order() const { return b_.size(); }

 private:
  Vector b_;
  double d0_;
  Vector d_;
  NoiseSpec noise_;
  double radius_;
};

/// Z_t = B' Z_{t-1} + Sigma(Z_{t-1}) eta_t with Sigma(z) = [C + F'zz'F]^{1/2}.
class BekkVar {
 public:
  BekkVar(Matrix b, Matrix c, Matrix f, NoiseSpec noise)
      : b_(std::move(b)), c_(std::move(c)), f_(std::move(f)), noise_(std::move(noise)) {
    const Index p = b_.rows();
    detail::check_square(b_, p, "bekk_var B");
    detail::check_square(c_, p, "bekk_var C");
    detail::check_square(f_, p, "bekk_var F");
    detail::check_symmetric_psd(c_, "bekk_var C", true);
    radius_ = stability_radius(b_, f_);
    detail::gate("bekk_var", radius_);
  }
  /// rho(BB' + FF').
  static double stability_radius(const Matrix& b, const Matrix& f) {
    return spectral_radius(b * b.transpose() + f * f.transpose());
  }

  Matrix sigma_squared(const Vector& z) const {
    const Vector fz = f_.transpose() * z;
    return c_ + fz * fz.transpose();
  }
  Matrix sigma(const Vector& z) const { return detail::psd_sqrt(sigma_squared(z)); }

  const Matrix& b() const { return b_; }
  const NoiseSpec& noise() const { return noise_; }
  double radius() const { return radius_; }
  Index p() const { return b_.rows(); }

 private:
  Matrix b_;
  Matrix c_;
  Matrix f_;
  NoiseSpec noise_;
  double radius_;
};

/// z_t = sum_k B_k' 1(z_{t-1} in G_k) z_{t-1} + eta_t.
///
/// Stability uses the operator norm of the augmented map
/// [B_1' : ... : B_l'] (p x lp), i.e. sqrt(rho(sum_k B_k' B_k)); since
/// ||f(z)|| = ||z||, it bounds ||B' f(z)|| / ||z|| for every region.
class ThresholdVar {
 public:
  ThresholdVar(std::vector<Matrix> b, Partition regions, NoiseSpec noise)
      : b_(std::move(b)), regions_(std::move(regions)), noise_(std::move(noise)) {
    if (b_.empty()) throw ShapeError("threshold_var: need at least one regime");
    if (regions_.count != b_.size()) throw ShapeError("threshold_var: one coefficient matrix per region");
    if (!regions_.contains) throw DomainError("threshold_var: missing region oracle");
    for (const auto& bk : b_) detail::check_square(bk, b_.front().rows(), "threshold_var B_k");
    radius_ = stability_radius(b_);
    detail::gate("threshold_var", radius_);
  }
  static double stability_radius(const std::vector<Matrix>& b) {
    Matrix gram = Matrix::Zero(b.front().rows(), b.front().rows());
    for (const auto& bk : b) gram += bk.transpose() * bk;
    return std::sqrt(spectral_radius(gram));
  }

  const std::vector<Matrix>& b() const { return b_; }
  const Partition& regions() const { return regions_; }
  const NoiseSpec& noise() const { return noise_; }
  double radius() const { return radius_; }
  Index p() const { return b_.front().rows(); }

 private:
  std::vector<Matrix> b_;
  Partition regions_;
  NoiseSpec noise_;
  double radius_;
};

/// z_t = (B' + Gamma_t) z_{t-1} + eta_t, Gamma_t iid N(0, gamma_sd^2) entries.
class RcVar {
 public:
  RcVar(Matrix b, double gamma_sd, NoiseSpec noise)
      : b_(std::move(b)), gamma_sd_(gamma_sd), noise_(std::move(noise)) {
    detail::check_square(b_, b_.rows(), "rc_var B");
    if (!(gamma_sd_ >= 0.0) || !std::isfinite(gamma_sd_)) throw DomainError("rc_var: Gamma sd must be >= 0");
    radius_ = stability_radius(b_, gamma_sd_);
    detail::gate("rc_var", radius_);
  }

  /// E[Gamma (x) Gamma] for iid N(0, sd^2) entries:
  /// entry ((i,k),(j,l)) = E[Gamma_ij Gamma_kl] = sd^2 [i==k][j==l].
  static Matrix gamma_kron_moment(Index p, double sd) {
    Matrix c = Matrix::Zero(p * p, p * p);
    for (Index i = 0; i < p; ++i)
      for (Index j = 0; j < p; ++j) c(i * p + i, j * p + j) = sd * sd;
    return c;
  }

  /// rho(B' (x) B' + E[Gamma (x) Gamma]).
  static double stability_radius(const Matrix& b, double sd) {
    const Matrix bt = b.transpose();
    return spectral_radius(detail::kron(bt, bt) + gamma_kron_moment(b.rows(), sd));
  }

  const Matrix& b() const { return b_; }
  double gamma_sd() const { return gamma_sd_; }
  const NoiseSpec& noise() const { return noise_; }
  double radius() const { return radius_; }
  Index p() const { return b_.rows(); }

 private:
  Matrix b_;
  double gamma_sd_;
  NoiseSpec noise_;
  double radius_;
};

using DgpSpec = std::variant<VarT, ArchVar, UnivariateArch, BekkVar, ThresholdVar, RcVar>;

inline double stability_radius(const DgpSpec& spec) {
  return std::visit([](const auto& s) { return s.radius(); }, spec);
}

inline const char* variant_name(const DgpSpec& spec) {
  static constexpr const char* names[] = {"var_t", "arch_var", "univariate_arch", "bekk_var", "threshold_var",
                                          "rc_var"};
  return names[spec.index()];
}

// ---------------------------------------------------------------------------
// Recursions
// ---------------------------------------------------------------------------

/// Direct lag-sum recursion Z_t = sum_k B_k' Z_{t-k} + noise_t from zero
/// initial lags; row t of the result is Z_{t+1}.
inline Matrix var_recursion(const VarModel& model, const Matrix& noise) {
  const Index p = model.p();
  const Index d = model.d();
  if (noise.cols() != p) throw ShapeError("var_recursion: noise must have p columns");
  Matrix z = Matrix::Zero(noise.rows() + d, p);  // first d rows are the zero start
  for (Index t = d; t < z.rows(); ++t) {
    for (Index i = 0; i < p; ++i) {
      double acc = 0.0;
      for (Index k = 1; k <= d; ++k)
        for (Index l = 0; l < p; ++l) acc += model.coeff(k - 1)(l, i) * z(t - k, l);
      z(t, i) = acc + noise(t - d, i);
    }
  }
  return z.bottomRows(noise.rows());
}

/// State recursion s_t = C s_{t-1} + e_t from s_0 = 0, for any square C.
/// Returns the full states, one per row.
inline Matrix companion_recursion(const Matrix& c, const Matrix& padded_noise) {
  const Index m = c.rows();
  if (c.cols() != m || padded_noise.cols() != m) throw ShapeError("companion_recursion: shape mismatch");
  Matrix s(padded_noise.rows(), m);
  Vector prev = Vector::Zero(m);
  for (Index t = 0; t < padded_noise.rows(); ++t) {
    for (Index i = 0; i < m; ++i) {
      double acc = 0.0;
      for (Index k = 0; k < m; ++k) acc += c(i, k) * prev(k);
      s(t, i) = acc + padded_noise(t, i);
    }
    prev = s.row(t).transpose();
  }
  return s;
}

namespace detail {

inline void check_state(const Vector& z, long step) {
  constexpr double kLimit = 1e100;
  for (Index i = 0; i < z.size(); ++i)
    if (!std::isfinite(z(i)) || std::abs(z(i)) > kLimit)
      throw ExplosivePathError("simulate: explosive path at step " + std::to_string(step), step);
}

// Companion state update for the VAR part; `top` receives the new first
// block. Accumulates in the same order as var_recursion.
inline void companion_step(const Matrix& c, Index p, Vector& state, const Vector& innovation) {
  const Index m = state.size();
  Vector next(m);
  for (Index i = 0; i < p; ++i) {
    double acc = 0.0;
    for (Index k = 0; k < m; ++k) acc += c(i, k) * state(k);
    next(i) = acc + innovation(i);
  }
  for (Index i = p; i < m; ++i) next(i) = state(i - p);
  state = std::move(next);
}

}  // namespace detail

/// Simulates burn_in + n steps from Z_0 = 0 and returns the last n rows.
inline TimeSeriesMatrix simulate(const DgpSpec& spec, Index n, Index burn_in, std::uint64_t seed) {
  if (n < 1) throw DomainError("simulate: n must be at least 1");
  if (burn_in < 0) throw DomainError("simulate: burn_in must be >= 0");
  Engine eng = make_engine(seed);
  const Index total = burn_in + n;

  return std::visit(
      [&](const auto& s) -> TimeSeriesMatrix {
        using S = std::decay_t<decltype(s)>;
        NoiseSampler draw(s.noise());

        if constexpr (std::is_same_v<S, UnivariateArch>) {
          const Index order = s.order();
          const Matrix c = UnivariateArch::companion(s.b());
          Vector state = Vector::Zero(order);
          Vector innovation = Vector::Zero(1);
          Matrix out(n, 1);
          for (Index t = 0; t < total; ++t) {
            innovation(0) = s.sigma(state) * draw(eng);
            detail::companion_step(c, 1, state, innovation);
            detail::check_state(state, static_cast<long>(t + 1));
            if (t >= burn_in) out(t - burn_in, 0) = state(0);
          }
          return TimeSeriesMatrix(std::move(out));
        } else {
          const Index p = s.p();
          Matrix out(n, p);
          Vector eta(p);
          auto draw_eta = [&] {
            for (Index j = 0; j < p; ++j) eta(j) = draw(eng);
          };

          if constexpr (std::is_same_v<S, VarT>) {
            const Matrix c = companion_matrix(s.model());
            Vector state = Vector::Zero(c.rows());
            for (Index t = 0; t < total; ++t) {
              draw_eta();
              detail::companion_step(c, p, state, eta);
              detail::check_state(state, static_cast<long>(t + 1));
              if (t >= burn_in) out.row(t - burn_in) = state.head(p).transpose();
            }
          } else {
            Vector z = Vector::Zero(p);
            std::normal_distribution<double> gamma_draw(0.0, 1.0);
            for (Index t = 0; t < total; ++t) {
              Vector next(p);
              if constexpr (std::is_same_v<S, ArchVar>) {
                draw_eta();
                const Vector sd = s.sigma_diag(z);
                const Vector mean = detail::transpose_times(s.b(), z);
                for (Index i = 0; i < p; ++i) next(i) = mean(i) + sd(i) * eta(i);
              } else if constexpr (std::is_same_v<S, BekkVar>) {
                draw_eta();
                next = detail::transpose_times(s.b(), z) + s.sigma(z) * eta;
              } else if constexpr (std::is_same_v<S, ThresholdVar>) {
                draw_eta();
                const std::size_t k = region_of(s.regions(), z);
                next = detail::transpose_times(s.b()[k], z) + eta;
              } else if constexpr (std::is_same_v<S, RcVar>) {
                Matrix g(p, p);
                for (Index i = 0; i < p; ++i)
                  for (Index j = 0; j < p; ++j) g(i, j) = s.gamma_sd() * gamma_draw(eng);
                draw_eta();
                next = detail::transpose_times(s.b(), z) + g * z + eta;
              }
              detail::check_state(next, static_cast<long>(t + 1));
              z = std::move(next);
              if (t >= burn_in) out.row(t - burn_in) = z.transpose();
            }
          }
          return TimeSeriesMatrix(std::move(out));
        }
      },
      spec);
}

// ---------------------------------------------------------------------------
// Transition matrix generator
// ---------------------------------------------------------------------------

inline constexpr int kErAttempts = 100;

enum class EdgeWeights {
  adjacency,  //!< 0/1 adjacency matrix of the random graph
  uniform,    //!< nonzero entries Uniform(-1, 1), redrawn at 0
};

/// Erdos-Renyi sparse transition matrix: each entry nonzero with probability
/// `density` (value 1, or Uniform(-1,1) redrawn at 0), rescaled to spectral
/// radius rho_target. Draws with zero spectral radius are regenerated from the next
/// substream.
inline Matrix gen_er_transition(Index p, double density, double rho_target, std::uint64_t seed,
                                EdgeWeights weights = EdgeWeights::adjacency) {
  if (p < 1) throw DomainError("gen_er_transition: p must be at least 1");
  if (!(density > 0.0) || density > 1.0) throw DomainError("gen_er_transition: density must be in (0, 1]");
  if (!(rho_target > 0.0)) throw DomainError("gen_er_transition: rho_target must be positive");
  for (int attempt = 0; attempt < kErAttempts; ++attempt) {
    Engine eng = make_engine(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    std::bernoulli_distribution edge(density);
    std::uniform_real_distribution<double> value(-1.0, 1.0);
    Matrix a = Matrix::Zero(p, p);
    for (Index i = 0; i < p; ++i)
      for (Index j = 0; j < p; ++j) {
        if (!edge(eng)) continue;
        double v = 1.0;
        if (weights == EdgeWeights::uniform) {
          v = 0.0;
          while (v == 0.0) v = value(eng);
        }
        a(i, j) = v;
      }
    if (structurally_nilpotent(a)) continue;
    if (!(spectral_radius(a) > 1e-12)) continue;
    return rescale_to_radius(a, rho_target);
  }
  throw Error("gen_er_transition: no draw with nonzero spectral radius after " + std::to_string(kErAttempts) +
              " attempts (p=" + std::to_string(p) + ", density=" + std::to_string(density) + ")");
}

}  // namespace robvar
