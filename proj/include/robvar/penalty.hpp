#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "robvar/core.hpp"

namespace robvar {

enum class PenaltyKind { l1, group };

/// l1 norm, or the group l2,1 norm over a partition of the coordinates.
class Penalty {
 public:
  using Groups = std::vector<std::vector<Index>>;

  static Penalty l1() { return Penalty(PenaltyKind::l1, {}); }

  /// Groups must be disjoint, nonempty, and cover 0..q-1 for the vectors the
  /// penalty is applied to; coverage is checked against each input's length.
  static Penalty group(Groups groups) {
    if (groups.empty()) throw DomainError("Penalty: group penalty needs at least one group");
    Index total = 0;
    for (const auto& g : groups) {
      if (g.empty()) throw DomainError("Penalty: empty group");
      total += static_cast<Index>(g.size());
    }
    std::vector<bool> seen(static_cast<std::size_t>(total), false);
    for (const auto& g : groups) {
      for (Index j : g) {
        if (j < 0 || j >= total) throw DomainError("Penalty: groups do not partition 0.." + std::to_string(total - 1));
        if (seen[static_cast<std::size_t>(j)]) throw DomainError("Penalty: index " + std::to_string(j) + " in two groups");
        seen[static_cast<std::size_t>(j)] = true;
      }
    }
    return Penalty(PenaltyKind::group, std::move(groups));
  }

  /// Consecutive blocks of equal size.
  static Penalty contiguous_groups(Index q, Index block) {
    if (block < 1 || q % block != 0) throw DomainError("Penalty: block size must divide q");
    Groups groups;
    for (Index start = 0; start < q; start += block) {
      std::vector<Index> g;
      for (Index j = start; j < start + block; ++j) g.push_back(j);
      groups.push_back(std::move(g));
    }
    return group(std::move(groups));
  }

  PenaltyKind kind() const { return kind_; }
  const Groups& groups() const { return groups_; }
  Index covered() const { return covered_; }

  void check_coverage(Index q) const {
    if (kind_ == PenaltyKind::group && q != covered_)
      throw ShapeError("Penalty: groups cover " + std::to_string(covered_) + " coordinates but vector has " +
                       std::to_string(q));
  }

 private:
  Penalty(PenaltyKind kind, Groups groups) : kind_(kind), groups_(std::move(groups)) {
    for (const auto& g : groups_) covered_ += static_cast<Index>(g.size());
  }

  PenaltyKind kind_;
  Groups groups_;
  Index covered_ = 0;
};

namespace detail {

inline double block_norm(const Vector& v, const std::vector<Index>& g) {
  long double s = 0.0L;
  for (Index j : g) s += static_cast<long double>(v(j)) * v(j);
  return static_cast<double>(std::sqrt(s));
}

}  // namespace detail

inline double penalty_value(const Penalty& pen, const Vector& v) {
  pen.check_coverage(v.size());
  long double s = 0.0L;
  if (pen.kind() == PenaltyKind::l1) {
    for (Index j = 0; j < v.size(); ++j) s += std::abs(v(j));
  } else {
    for (const auto& g : pen.groups()) s += detail::block_norm(v, g);
  }
  return static_cast<double>(s);
}

/// Dual norm: l-infinity for l1, max block l2 norm for the group norm.
inline double dual_value(const Penalty& pen, const Vector& v) {
  pen.check_coverage(v.size());
  double m = 0.0;
  if (pen.kind() == PenaltyKind::l1) {
    for (Index j = 0; j < v.size(); ++j) m = std::max(m, std::abs(v(j)));
  } else {
    for (const auto& g : pen.groups()) m = std::max(m, detail::block_norm(v, g));
  }
  return m;
}

inline double soft_threshold(double v, double alpha) {
  const double shrunk = std::abs(v) - alpha;
  if (shrunk <= 0.0) return 0.0;
  return v > 0.0 ? shrunk : -shrunk;
}

/// Prox of alpha * ||.||_1: sign(v_j) * (|v_j| - alpha)_+.
inline Vector soft_threshold(const Vector& v, double alpha) {
  if (!(alpha >= 0.0)) throw DomainError("soft_threshold: alpha must be nonnegative");
  require_finite(v, "soft_threshold");
  Vector out(v.size());
  for (Index j = 0; j < v.size(); ++j) out(j) = soft_threshold(v(j), alpha);
  return out;
}

/// Prox of alpha * sum_i ||v_{G_i}||_2: blockwise shrink by (1 - alpha/||v_G||)_+.
inline Vector group_soft_threshold(const Vector& v, const Penalty& pen, double alpha) {
  if (pen.kind() != PenaltyKind::group) throw DomainError("group_soft_threshold: penalty is not a group penalty");
  if (!(alpha >= 0.0)) throw DomainError("group_soft_threshold: alpha must be nonnegative");
  pen.check_coverage(v.size());
  require_finite(v, "group_soft_threshold");
  if (alpha == 0.0) return v;
  Vector out = Vector::Zero(v.size());
  for (const auto& g : pen.groups()) {
    const double norm = detail::block_norm(v, g);
    if (norm <= alpha) continue;
    const double factor = 1.0 - alpha / norm;
    for (Index j : g) out(j) = v(j) * factor;
  }
  return out;
}

inline Vector prox(const Penalty& pen, const Vector& v, double alpha) {
  return pen.kind() == PenaltyKind::l1 ? soft_threshold(v, alpha) : group_soft_threshold(v, pen, alpha);
}

}  // namespace robvar
