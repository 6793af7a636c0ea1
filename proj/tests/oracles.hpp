#pragma once

// Test-side reference implementations. Nothing here calls the library's
// numerical routines; each oracle is written from the defining formula.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "robvar/robvar.hpp"

namespace oracle {

using robvar::Index;
using robvar::Matrix;
using robvar::Vector;

// --- robust loss -----------------------------------------------------------

inline double huber(double u, double tau) {
  const double a = std::fabs(u);
  return a <= tau ? 0.5 * u * u : tau * a - 0.5 * tau * tau;
}

inline double huber_d(double u, double tau) {
  if (u > tau) return tau;
  if (u < -tau) return -tau;
  return u;
}

inline double weight(const Matrix& x, Index i, double b) {
  double s = 0.0;
  for (Index k = 0; k < x.cols(); ++k) s += x(i, k) * x(i, k);
  const double norm = std::sqrt(s);
  return norm == 0.0 ? 1.0 : std::min(1.0, b / norm);
}

/// (1/n) sum_i w_i huber(w_i r_i), plain double loops.
inline double objective(const Vector& y, const Matrix& x, const Vector& beta, double tau, double b) {
  double total = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    double fit = 0.0;
    for (Index k = 0; k < x.cols(); ++k) fit += x(i, k) * beta(k);
    const double w = weight(x, i, b);
    total += w * huber(w * (y(i) - fit), tau);
  }
  return total / static_cast<double>(x.rows());
}

inline Vector gradient(const Vector& y, const Matrix& x, const Vector& beta, double tau, double b) {
  Vector g = Vector::Zero(x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    double fit = 0.0;
    for (Index k = 0; k < x.cols(); ++k) fit += x(i, k) * beta(k);
    const double w = weight(x, i, b);
    const double c = huber_d(w * (y(i) - fit), tau) * w * w;
    for (Index k = 0; k < x.cols(); ++k) g(k) -= c * x(i, k);
  }
  return g / static_cast<double>(x.rows());
}

inline Vector central_difference(const std::function<double(const Vector&)>& f, const Vector& at, double h) {
  Vector g(at.size());
  for (Index k = 0; k < at.size(); ++k) {
    Vector plus = at;
    Vector minus = at;
    plus(k) += h;
    minus(k) -= h;
    g(k) = (f(plus) - f(minus)) / (2.0 * h);
  }
  return g;
}

// --- one-dimensional minimization -------------------------------------------

/// Golden-section search in long double on [lo, hi] for a unimodal f.
inline long double golden_min(const std::function<long double(long double)>& f, long double lo, long double hi,
                              int iters = 200) {
  const long double r = (std::sqrt(5.0L) - 1.0L) / 2.0L;
  long double a = lo;
  long double b = hi;
  long double c = b - r * (b - a);
  long double d = a + r * (b - a);
  long double fc = f(c);
  long double fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return (a + b) / 2.0L;
}

/// Root of a nondecreasing function on [lo, hi] by bisection.
inline double bisect_increasing(const std::function<double(double)>& g, double lo, double hi, int iters = 200) {
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Cyclic coordinate descent for the l1-penalized robust objective. Each
/// coordinate is minimized exactly via its monotone partial derivative.
inline Vector coordinate_descent(const Vector& y, const Matrix& x, double tau, double b, double lambda,
                                 int sweeps = 5000, double tol = 1e-13) {
  const Index q = x.cols();
  Vector beta = Vector::Zero(q);
  for (int s = 0; s < sweeps; ++s) {
    double moved = 0.0;
    for (Index j = 0; j < q; ++j) {
      auto partial = [&](double t) {
        Vector trial = beta;
        trial(j) = t;
        return gradient(y, x, trial, tau, b)(j);
      };
      const double g0 = partial(0.0);
      double t = 0.0;
      if (g0 < -lambda) {
        double hi = 1.0;
        while (partial(hi) + lambda < 0.0) hi *= 2.0;
        t = bisect_increasing([&](double u) { return partial(u) + lambda; }, 0.0, hi);
      } else if (g0 > lambda) {
        double lo = -1.0;
        while (partial(lo) - lambda > 0.0) lo *= 2.0;
        t = bisect_increasing([&](double u) { return partial(u) - lambda; }, lo, 0.0);
      }
      moved = std::max(moved, std::fabs(t - beta(j)));
      beta(j) = t;
    }
    if (moved < tol) break;
  }
  return beta;
}

// --- eigenvalues ------------------------------------------------------------

/// Monic characteristic polynomial coefficients (highest degree first) by
/// the Faddeev-LeVerrier recursion.
inline std::vector<long double> char_poly(const Matrix& a) {
  const Index n = a.rows();
  using LM = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const LM al = a.cast<long double>();
  std::vector<long double> c(static_cast<std::size_t>(n + 1), 0.0L);
  c[0] = 1.0L;
  LM m = LM::Zero(n, n);
  for (Index k = 1; k <= n; ++k) {
    m = al * m + c[static_cast<std::size_t>(k - 1)] * LM::Identity(n, n);
    c[static_cast<std::size_t>(k)] = -(al * m).trace() / static_cast<long double>(k);
  }
  return c;
}

/// All roots of a monic polynomial by Durand-Kerner iteration.
inline std::vector<std::complex<long double>> poly_roots(const std::vector<long double>& c) {
  using C = std::complex<long double>;
  const std::size_t n = c.size() - 1;
  auto eval = [&](C z) {
    C v = 1.0L;
    for (std::size_t k = 1; k <= n; ++k) v = v * z + c[k];
    return v;
  };
  long double bound = 1.0L;
  for (std::size_t k = 1; k <= n; ++k) bound = std::max(bound, 1.0L + std::fabs(c[k]));
  std::vector<C> z(n);
  const C seed(0.4L, 0.9L);
  for (std::size_t k = 0; k < n; ++k) z[k] = std::pow(seed, static_cast<long double>(k)) * (bound / 2.0L);
  for (int it = 0; it < 5000; ++it) {
    long double delta = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      C denom = 1.0L;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) denom *= z[i] - z[j];
      const C step = eval(z[i]) / denom;
      z[i] -= step;
      delta = std::max(delta, std::abs(step));
    }
    if (delta < 1e-18L) break;
  }
  return z;
}

inline double spectral_radius(const Matrix& a) {
  long double r = 0.0L;
  for (const auto& z : poly_roots(char_poly(a))) r = std::max(r, std::abs(z));
  return static_cast<double>(r);
}

/// lambda_max of a symmetric matrix by power iteration on A + shift I.
inline double sym_max_eig(const Matrix& a, int iters = 20000) {
  Vector v = Vector::Ones(a.rows()) / std::sqrt(static_cast<double>(a.rows()));
  double est = 0.0;
  for (int i = 0; i < iters; ++i) {
    Vector w = a * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    est = v.dot(w);
    v = w / norm;
  }
  return est;
}

// --- statistics -------------------------------------------------------------

inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / static_cast<double>(ra.size());
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / static_cast<double>(rb.size());
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// --- XML --------------------------------------------------------------------

/// Minimal well-formedness check: balanced, properly nested tags, quoted
/// attributes. Returns an empty string on success, else a description.
inline std::string xml_problem(const std::string& doc) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  bool root_seen = false;
  while (i < doc.size()) {
    if (doc[i] != '<') {
      if (doc[i] == '&') {
        const std::size_t semi = doc.find(';', i);
        if (semi == std::string::npos) return "bare ampersand";
        const std::string ent = doc.substr(i, semi - i + 1);
        if (ent != "&amp;" && ent != "&lt;" && ent != "&gt;" && ent != "&quot;" && ent != "&apos;")
          return "unknown entity " + ent;
      }
      ++i;
      continue;
    }
    const std::size_t close = doc.find('>', i);
    if (close == std::string::npos) return "unterminated tag";
    std::string tag = doc.substr(i + 1, close - i - 1);
    i = close + 1;
    if (tag.rfind("?", 0) == 0 || tag.rfind("!", 0) == 0) continue;
    if (tag.rfind("/", 0) == 0) {
      const std::string name = tag.substr(1);
      if (stack.empty() || stack.back() != name) return "mismatched </" + name + ">";
      stack.pop_back();
      continue;
    }
    const bool self_closing = !tag.empty() && tag.back() == '/';
    if (self_closing) tag.pop_back();
    const std::size_t sp = tag.find_first_of(" \t\n");
    const std::string name = tag.substr(0, sp);
    if (name.empty()) return "empty tag name";
    std::size_t quotes = 0;
    for (char ch : tag)
      if (ch == '"') ++quotes;
    if (quotes % 2 != 0) return "unbalanced quotes in <" + name + ">";
    if (stack.empty()) {
      if (root_seen) return "second root element";
      root_seen = true;
    }
    if (!self_closing) stack.push_back(name);
  }
  if (!stack.empty()) return "unclosed <" + stack.back() + ">";
  return root_seen ? "" : "no root element";
}

/// Values of attribute `attr` on every <element ...> occurrence.
inline std::vector<std::string> attribute_values(const std::string& doc, const std::string& element,
                                                 const std::string& attr) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  const std::string open = "<" + element + " ";
  while ((pos = doc.find(open, pos)) != std::string::npos) {
    const std::size_t end = doc.find('>', pos);
    const std::string tag = doc.substr(pos, end - pos);
    const std::string key = " " + attr + "=\"";
    const std::size_t a = tag.find(key);
    if (a != std::string::npos) {
      const std::size_t start = a + key.size();
      out.push_back(tag.substr(start, tag.find('"', start) - start));
    }
    pos = end;
  }
  return out;
}

inline std::size_t count_of(const std::string& doc, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = doc.find(needle); pos != std::string::npos; pos = doc.find(needle, pos + 1)) ++n;
  return n;
}

// --- data -------------------------------------------------------------------

inline Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64& eng, double sd = 1.0) {
  std::normal_distribution<double> nd(0.0, sd);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = nd(eng);
  return m;
}

inline Vector gaussian_vector(Index n, std::mt19937_64& eng, double sd = 1.0) {
  std::normal_distribution<double> nd(0.0, sd);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = nd(eng);
  return v;
}

}  // namespace oracle
