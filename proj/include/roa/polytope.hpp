#pragma once

// Halfspace polytopes {x : A x <= b}.

#include <Eigen/Dense>
#include <json.hpp>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "roa/dynsys.hpp"

namespace roa {

inline constexpr double kMembershipTol = 1e-9;
inline constexpr double kFeasibilityTol = 1e-9;

/// Axis-aligned box [lo, hi].
struct Box {
  State lo;
  State hi;

  std::size_t dim() const { return static_cast<std::size_t>(lo.size()); }
  bool contains(const State& x) const;
};

class HalfspacePolytope {
 public:
  /// Rejects shape mismatches and all-zero rows with a negative bound.
  HalfspacePolytope(Eigen::MatrixXd a, Eigen::VectorXd b);

  /// Zero rows: all of R^dim.
  static HalfspacePolytope whole_space(std::size_t dim);
  /// |x_i| <= radius for every coordinate (2 * dim rows).
  static HalfspacePolytope cube(std::size_t dim, double radius);
  static HalfspacePolytope box(const Box& box);

  std::size_t dim() const { return dim_; }
  std::size_t rows() const { return static_cast<std::size_t>(a_.rows()); }
  const Eigen::MatrixXd& a() const { return a_; }
  const Eigen::VectorXd& b() const { return b_; }

  /// max_i (a_i . x - b_i), or -infinity with no rows.
  double max_violation(const State& x) const;

  /// a_i . x <= b_i + tol for every row.
  bool contains(const State& x, double tol = kMembershipTol) const;

  /// Phase-1 simplex; empty iff no point satisfies all rows within 1e-9.
  bool is_empty() const;

  /// The phase-1 witness, if any.
  std::optional<State> feasible_point() const;

  /// Coordinate-wise extent via LP; unbounded directions are clipped to
  /// +-clip. Throws PreconditionError when the polytope is empty.
  Box bounding_box(double clip = 50.0) const;

  bool operator==(const HalfspacePolytope& other) const;

 private:
  std::size_t dim_;
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
};

/// Row concatenation. Throws PreconditionError on an empty list or mixed
/// dimensions.
HalfspacePolytope intersect(std::span<const HalfspacePolytope> polytopes);

// {"A": [[...], ...], "b": [...], "dim": n}. "dim" is needed only when A
// has no rows; it is always written.
void to_json(nlohmann::json& j, const HalfspacePolytope& p);
HalfspacePolytope polytope_from_json(const nlohmann::json& j);

}  // namespace roa
