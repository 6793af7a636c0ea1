#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "robvar/penalty.hpp"

using namespace robvar;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

const Penalty kPairs = Penalty::group({{0, 1}, {2, 3}});

}  // namespace

TEST(PenaltyValue, L1AndGroup) {
  EXPECT_DOUBLE_EQ(penalty_value(Penalty::l1(), vec({1, -2, 0})), 3.0);
  EXPECT_DOUBLE_EQ(penalty_value(kPairs, vec({3, 4, 0, 0})), 5.0);
  EXPECT_DOUBLE_EQ(penalty_value(Penalty::l1(), Vector::Zero(5)), 0.0);
}

TEST(DualValue, L1AndGroup) {
  EXPECT_DOUBLE_EQ(dual_value(Penalty::l1(), vec({1, -2, 0})), 2.0);
  EXPECT_DOUBLE_EQ(dual_value(kPairs, vec({3, 4, 1, 0})), 5.0);
}

TEST(DualValue, HolderInequality) {
  std::mt19937_64 eng(2);
  for (const auto& pen : {Penalty::l1(), kPairs}) {
    for (int k = 0; k < 100; ++k) {
      const Vector v = oracle::gaussian_vector(4, eng);
      const Vector w = oracle::gaussian_vector(4, eng);
      EXPECT_GE(penalty_value(pen, v) * dual_value(pen, w), v.dot(w) - 1e-12);
    }
  }
}

TEST(DualValue, SupremumOverUnitBall) {
  std::mt19937_64 eng(4);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::exponential_distribution<double> ex(1.0);
  for (const auto& pen : {Penalty::l1(), kPairs}) {
    const Vector v = oracle::gaussian_vector(4, eng);
    double best = -INFINITY;
    for (int k = 0; k < 100000; ++k) {
      // Sparse-ish draws reach the vertices of the l1 ball.
      Vector u(4);
      for (Index j = 0; j < 4; ++j) u(j) = nd(eng) * std::pow(ex(eng), 3.0);
      u /= penalty_value(pen, u);
      best = std::max(best, u.dot(v));
    }
    const double dual = dual_value(pen, v);
    EXPECT_LE(best, dual + 1e-12);
    EXPECT_GE(best, 0.98 * dual);
  }
}

TEST(PenaltyGroups, Validation) {
  EXPECT_THROW(Penalty::group({{0, 1}, {1, 2}}), DomainError);
  EXPECT_THROW(Penalty::group({{0}, {}}), DomainError);
  EXPECT_THROW(Penalty::group({{0}, {2}}), DomainError);
  EXPECT_THROW(penalty_value(kPairs, Vector::Zero(3)), ShapeError);
  EXPECT_THROW(Penalty::contiguous_groups(5, 2), DomainError);
  EXPECT_EQ(Penalty::contiguous_groups(6, 3).groups().size(), 2u);
}

TEST(SoftThreshold, Examples) {
  EXPECT_DOUBLE_EQ(soft_threshold(vec({1.2}), 0.5)(0), 0.7);
  EXPECT_DOUBLE_EQ(soft_threshold(vec({-0.3}), 0.5)(0), 0.0);
  const Vector v = vec({1.5, -2.0, 0.0});
  EXPECT_EQ(soft_threshold(v, 0.0), v);
  EXPECT_THROW(soft_threshold(v, -1.0), DomainError);
}

TEST(GroupSoftThreshold, Examples) {
  const Penalty one = Penalty::group({{0, 1}});
  const Vector out = group_soft_threshold(vec({3, 4}), one, 1.0);
  EXPECT_NEAR(out(0), 2.4, 1e-15);
  EXPECT_NEAR(out(1), 3.2, 1e-15);
  EXPECT_EQ(group_soft_threshold(vec({0.3, 0.4}), one, 1.0), Vector::Zero(2));
  const Vector v = vec({1, 2, 3, 4});
  EXPECT_EQ(group_soft_threshold(v, kPairs, 0.0), v);
  EXPECT_THROW(group_soft_threshold(v, Penalty::l1(), 1.0), DomainError);
}

TEST(SoftThreshold, MatchesGoldenSection) {
  std::mt19937_64 eng(6);
  std::uniform_real_distribution<double> uv(-10.0, 10.0);
  std::uniform_real_distribution<double> ua(0.0, 5.0);
  for (int k = 0; k < 1000; ++k) {
    const long double v = uv(eng);
    const long double a = ua(eng);
    const long double z = oracle::golden_min(
        [&](long double t) { return 0.5L * (t - v) * (t - v) + a * std::fabs(t); }, -std::fabs(v) - 1, std::fabs(v) + 1);
    EXPECT_NEAR(soft_threshold(static_cast<double>(v), static_cast<double>(a)), static_cast<double>(z), 1e-8);
  }
}

TEST(GroupSoftThreshold, MatchesGoldenSectionAlongBlock) {
  // The minimizer of 1/2||z - v||^2 + a||z|| lies on the ray through v, so
  // a one-dimensional search over z = t v/||v|| is exact.
  std::mt19937_64 eng(8);
  std::uniform_real_distribution<double> ua(0.0, 5.0);
  const Penalty one = Penalty::group({{0, 1, 2}});
  for (int k = 0; k < 1000; ++k) {
    const Vector v = oracle::gaussian_vector(3, eng, 3.0);
    const long double a = ua(eng);
    const long double nv = v.norm();
    const long double t = oracle::golden_min(
        [&](long double s) { return 0.5L * (s - nv) * (s - nv) + a * std::fabs(s); }, -nv - 1, nv + 1);
    const Vector expected = v * static_cast<double>(t / nv);
    const Vector got = group_soft_threshold(v, one, static_cast<double>(a));
    EXPECT_LT((got - expected).cwiseAbs().maxCoeff(), 1e-8);
    // off-ray perturbations never improve the prox objective
    auto obj = [&](const Vector& z) { return 0.5 * (z - v).squaredNorm() + static_cast<double>(a) * z.norm(); };
    const Vector dz = oracle::gaussian_vector(3, eng, 1e-3);
    EXPECT_LE(obj(got), obj(got + dz) + 1e-12);
  }
}

TEST(Prox, NonExpansive) {
  std::mt19937_64 eng(10);
  std::uniform_real_distribution<double> ua(0.0, 2.0);
  for (const auto& pen : {Penalty::l1(), kPairs}) {
    for (int k = 0; k < 100; ++k) {
      const Vector v1 = oracle::gaussian_vector(4, eng, 2.0);
      const Vector v2 = oracle::gaussian_vector(4, eng, 2.0);
      const double a = ua(eng);
      EXPECT_LE((prox(pen, v1, a) - prox(pen, v2, a)).norm(), (v1 - v2).norm() + 1e-12);
    }
  }
}
