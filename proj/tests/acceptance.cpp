// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>

#include "oracles.hpp"
#include "robvar/robvar.hpp"

using namespace robvar;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// max finite-difference relative error over 100 instances
Verdict gradient_check() {
  std::mt19937_64 eng(1001);
  std::uniform_int_distribution<Index> q_pick(1, 10), n_pick(5, 50);
  const double taus[] = {0.5, 1.0, 5.0};
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Index q = q_pick(eng), n = n_pick(eng);
    const Matrix x = oracle::gaussian_matrix(n, q, eng, 2.0);
    const Vector y = oracle::gaussian_vector(n, eng, 3.0);
    const Vector beta = oracle::gaussian_vector(q, eng);
    const Regression reg(y, x);
    const RobustConfig cfg(taus[k % 3], 3.0);
    const Vector g = robust_gradient(reg, beta, cfg);
    const Vector fd =
        oracle::central_difference([&](const Vector& b) { return robust_objective(reg, b, cfg); }, beta, 1e-6);
    worst = std::max(worst, (g - fd).norm() / std::max(1e-8, fd.norm()));
  }
  return {worst <= 1e-6, fmt("max relative error %.3g", worst)};
}

Verdict prox_check() {
  std::mt19937_64 eng(1002);
  std::uniform_real_distribution<double> uv(-10.0, 10.0), ua(0.0, 5.0);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const long double v = uv(eng), a = ua(eng);
    const long double z = oracle::golden_min(
        [&](long double t) { return 0.5L * (t - v) * (t - v) + a * std::fabs(t); }, -std::fabs(v) - 1, std::fabs(v) + 1);
    worst = std::max(worst, std::fabs(soft_threshold(static_cast<double>(v), static_cast<double>(a)) - static_cast<double>(z)));
  }
  const Penalty block = Penalty::group({{0, 1, 2}});
  for (int k = 0; k < 1000; ++k) {
    const Vector v = oracle::gaussian_vector(3, eng, 3.0);
    const long double a = ua(eng), nv = v.norm();
    const long double t = oracle::golden_min(
        [&](long double s) { return 0.5L * (s - nv) * (s - nv) + a * std::fabs(s); }, -nv - 1, nv + 1);
    const Vector expected = v * static_cast<double>(t / nv);
    worst = std::max(worst, (group_soft_threshold(v, block, static_cast<double>(a)) - expected).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-8, fmt("max deviation %.3g over 2000 cases", worst)};
}

Verdict ols_check() {
  std::mt19937_64 eng(1003);
  const Matrix x = oracle::gaussian_matrix(2000, 5, eng);
  const Vector y = x * oracle::gaussian_vector(5, eng) + oracle::gaussian_vector(2000, eng);
  const Vector ols = (x.transpose() * x).ldlt().solve(x.transpose() * y);
  const FitResult r = proximal_gradient_fit(Regression(y, x), RobustConfig(1e8, 1e8), Penalty::l1(), 0.0, {});
  const double gap = (r.beta_hat - ols).cwiseAbs().maxCoeff();
  return {gap <= 1e-4, fmt("sup-norm gap %.3g", gap)};
}

Verdict coordinate_descent_check() {
  std::mt19937_64 eng(1004);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Matrix x = oracle::gaussian_matrix(50, 3, eng, 1.5);
    const Vector y = x * oracle::gaussian_vector(3, eng) + oracle::gaussian_vector(50, eng);
    OptimizerConfig opt;
    opt.seed = static_cast<std::uint64_t>(k);
    const FitResult r = proximal_gradient_fit(Regression(y, x), RobustConfig(1.0, 3.0), Penalty::l1(), 0.1, opt);
    const Vector ref = oracle::coordinate_descent(y, x, 1.0, 3.0, 0.1);
    const double f_fit = oracle::objective(y, x, r.beta_hat, 1.0, 3.0) + 0.1 * r.beta_hat.cwiseAbs().sum();
    const double f_ref = oracle::objective(y, x, ref, 1.0, 3.0) + 0.1 * ref.cwiseAbs().sum();
    worst = std::max(worst, std::fabs(f_fit - f_ref));
  }
  return {worst <= 1e-6, fmt("max objective gap %.3g", worst)};
}

Verdict companion_check() {
  std::mt19937_64 eng(1005);
  const VarModel model(
      std::vector<Matrix>{oracle::gaussian_matrix(3, 3, eng, 0.2), oracle::gaussian_matrix(3, 3, eng, 0.2)});
  Engine stream = make_engine(55);
  const Matrix noise = sample_noise(StudentT{3.0}, 1000, 3, stream);
  Matrix padded = Matrix::Zero(1000, 6);
  padded.leftCols(3) = noise;
  const bool same_direct = var_recursion(model, noise) == companion_recursion(companion_matrix(model), padded).leftCols(3);
  const bool same_sim = simulate(VarT(model, StudentT{3.0}), 1000, 0, 55).values() == var_recursion(model, noise);
  return {same_direct && same_sim, same_direct && same_sim ? "bitwise equal over 1000 steps" : "paths differ"};
}

Verdict stability_check() {
  auto diag2 = [](double a, double b) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
  };
  const std::vector<std::function<DgpSpec(double)>> builders{
      [&](double r) { return DgpSpec(VarT(VarModel(diag2(r, 0.3)), StudentT{3.0})); },
      [&](double r) {
        return DgpSpec(ArchVar(diag2(0.5, 0.2), Vector::Ones(2), {Matrix::Identity(2, 2) * (r - 0.25), Matrix::Zero(2, 2)},
                               Gaussian{}));
      },
      [&](double r) { return DgpSpec(UnivariateArch(Vector::Constant(1, 0.5), 1.0, Vector::Constant(1, r - 0.25))); },
      [&](double r) {
        return DgpSpec(BekkVar(diag2(0.6, 0.1), Matrix::Identity(2, 2), Matrix::Identity(2, 2) * std::sqrt(r - 0.36),
                               Gaussian{}));
      },
      [&](double r) {
        const Matrix bk = Matrix::Identity(2, 2) * (r / std::sqrt(2.0));
        return DgpSpec(ThresholdVar({bk, bk}, Partition::sign_of(0), Gaussian{}));
      },
      [&](double r) { return DgpSpec(RcVar(Matrix::Identity(2, 2) * 0.6, std::sqrt((r - 0.36) / 2.0), Gaussian{})); }};
  int gated = 0;
  for (const auto& build : builders) {
    bool accepted = false, rejected = false;
    try {
      accepted = std::fabs(stability_radius(build(0.999)) - 0.999) < 1e-9;
    } catch (const StabilityError&) {
    }
    try {
      build(1.001);
    } catch (const StabilityError& e) {
      rejected = std::fabs(e.radius() - 1.001) < 1e-9;
    }
    gated += accepted && rejected;
  }
  std::mt19937_64 eng(1006);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const Matrix a = oracle::gaussian_matrix(4, 4, eng);
    worst = std::max(worst, std::fabs(spectral_radius(a) - oracle::spectral_radius(a)));
  }
  return {gated == 6 && worst <= 1e-6,
          fmt("%.0f/6 variants gated; spectral radius max error %.3g", gated, worst)};
}

std::map<std::pair<double, double>, double> means(const ResultTable& t, const std::string& x_axis) {
  std::map<std::pair<double, double>, double> out;
  for (const auto& a : aggregate(t, x_axis, "tau")) out[{a.series, a.x}] = a.mean;
  return out;
}

Verdict case1_check() {
  const ExperimentSpec spec = make_preset("case1_heavy_small");
  const ResultTable t = run_experiment(spec, resolve_workers());
  const auto m = means(t, "df");
  int wins = 0;
  std::string detail;
  for (double df : spec.df_grid) {
    const double e1 = m.at({1.0, df}), e10 = m.at({10.0, df});
    wins += e1 < e10;
    detail += fmt(" df=%.4g:%.4f/%.4f", df, e1, e10);
  }
  const double frac = static_cast<double>(wins) / static_cast<double>(spec.df_grid.size());
  return {frac >= 0.8, fmt("tau=1 below tau=10 at %.0f%% of df points;", 100.0 * frac) + detail};
}

Verdict case23_check() {
  ExperimentSpec spec = make_preset("case2_small");
  spec.tau_grid = {1.0};
  const ResultTable t = run_experiment(spec, resolve_workers());
  const auto m = means(t, "n");
  std::vector<double> ns, errs;
  for (Index n : spec.n_grid) {
    ns.push_back(static_cast<double>(n));
    errs.push_back(m.at({1.0, static_cast<double>(n)}));
  }
  const double ratio = errs.back() / errs.front();
  const double rho = oracle::spearman(ns, errs);
  std::string detail = fmt("error(240)/error(30) = %.3f, spearman = %.3f; means", ratio, rho);
  for (double e : errs) detail += fmt(" %.4f", e);
  return {ratio <= 0.7 && rho < 0.0, detail};
}

Verdict deviation_check_rate() {
  DiagnoseSpec spec;  // p=10, n=30, t3, tau=1, b=3, 200 replications, calibrated c
  const auto rows = run_diagnostics(spec, resolve_workers());
  std::size_t passed = 0;
  for (const auto& r : rows) passed += r.report.deviation_pass;
  const double rate = static_cast<double>(passed) / static_cast<double>(rows.size());
  return {rate >= 0.9, fmt("pass rate %.3f over %.0f replications", rate, static_cast<double>(rows.size()))};
}

Verdict determinism_check() {
  ExperimentSpec spec = make_preset("case2_small");
  spec.replications = 3;
  const std::string one = results_to_csv(run_experiment(spec, 1));
  const std::string eight = results_to_csv(run_experiment(spec, 8));
  return {one == eight, one == eight ? "1 and 8 workers byte-identical" : "CSV differs between worker counts"};
}

Verdict bekk_threshold_check() {
  Matrix b(3, 3), c(3, 3), f(3, 3);
  b << 0.3, 0.1, 0.0, 0.0, 0.2, 0.1, 0.1, 0.0, 0.3;
  c << 1.0, 0.2, 0.1, 0.2, 1.5, 0.3, 0.1, 0.3, 2.0;
  f << 0.3, 0.1, 0.0, 0.0, 0.2, 0.1, 0.1, 0.1, 0.2;
  const BekkVar bekk(b, c, f, Gaussian{});
  std::mt19937_64 eng(1011);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Vector z = oracle::gaussian_vector(3, eng, 3.0);
    const Matrix s = bekk.sigma(z);
    Matrix target = c;
    for (Index i = 0; i < 3; ++i)
      for (Index j = 0; j < 3; ++j) {
        double fi = 0.0, fj = 0.0;
        for (Index l = 0; l < 3; ++l) {
          fi += f(l, i) * z(l);
          fj += f(l, j) * z(l);
        }
        target(i, j) += fi * fj;
      }
    worst = std::max(worst, (s * s - target).norm());
  }
  const Partition sign = Partition::sign_of(0);
  const Partition boxes = Partition::boxes({{0, {-0.5, 0.5}}, {1, {0.0}}});
  int bad = 0;
  for (int k = 0; k < 10000; ++k) {
    const Vector z = oracle::gaussian_vector(3, eng);
    for (const Partition* p : {&sign, &boxes}) {
      const auto hits = region_indicators(*p, z);
      bad += std::count(hits.begin(), hits.end(), true) != 1;
    }
  }
  return {worst <= 1e-10 && bad == 0, fmt("max Frobenius gap %.3g; %.0f points outside exactly one region", worst, bad)};
}

Verdict t_moments_check() {
  Engine eng = make_engine(1012);
  const Matrix draws = sample_noise(StudentT{3.0}, 1000000, 1, eng);
  std::vector<double> v(draws.data(), draws.data() + draws.size());
  long double sum = 0.0L;
  for (double x : v) sum += x;
  const long double mean = sum / v.size();
  long double ss = 0.0L;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double var = static_cast<double>(ss / (v.size() - 1));
  std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
  const double median = v[v.size() / 2];
  return {std::fabs(var - 3.0) <= 0.3 && std::fabs(median) <= 0.01, fmt("variance %.4f, median %.5f", var, median)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;  // 0: no runtime bound
    Verdict (*run)();
  };
  const Criterion criteria[] = {
      {1, "gradient vs finite differences", 5, gradient_check},
      {2, "prox operators vs golden section", 5, prox_check},
      {3, "least-squares limit", 10, ols_check},
      {4, "small-instance optimality", 30, coordinate_descent_check},
      {5, "companion equivalence", 0, companion_check},
      {6, "stability gates and spectral radius", 0, stability_check},
      {7, "tau=1 beats tau=10 under heavy tails", 300, case1_check},
      {8, "error decreases with n", 300, case23_check},
      {9, "deviation event frequency", 180, deviation_check_rate},
      {10, "determinism across worker counts", 0, determinism_check},
      {11, "BEKK root and threshold partition", 0, bekk_threshold_check},
      {12, "t-noise moments", 0, t_moments_check},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v{false, ""};
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_s > 0 && secs > c.limit_s) {
      v.pass = false;
      v.detail += fmt(" [over time limit %.0f s]", c.limit_s);
    }
    failures += !v.pass;
    std::printf("criterion %2d %s: %s (%s; %.2f s)\n", c.id, v.pass ? "PASS" : "FAIL", c.name, v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/12 criteria passed\n", 12 - failures);
  return failures == 0 ? 0 : 1;
}
