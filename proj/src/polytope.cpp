#include "roa/polytope.hpp"

#include <fmt/format.h>

#include <cmath>

#include "roa/kernels.hpp"
#include "roa/simplex.hpp"

namespace roa {

bool Box::contains(const State& x) const { return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all(); }

HalfspacePolytope::HalfspacePolytope(Eigen::MatrixXd a, Eigen::VectorXd b)
    : dim_(static_cast<std::size_t>(a.cols())), a_(std::move(a)), b_(std::move(b)) {
  if (a_.rows() != b_.size()) {
    throw PreconditionError(fmt::format("polytope has {} rows but {} bounds", a_.rows(), b_.size()));
  }
  if (dim_ == 0) throw PreconditionError("polytope dimension must be positive");
  for (Eigen::Index i = 0; i < a_.rows(); ++i) {
    if (!a_.row(i).allFinite() || !std::isfinite(b_[i])) {
      throw PreconditionError(fmt::format("polytope row {} is not finite", i));
    }
    if (a_.row(i).isZero(0.0) && b_[i] < 0.0) {
      throw PreconditionError(fmt::format("polytope row {} is 0 <= {} (infeasible)", i, b_[i]));
    }
  }
}

HalfspacePolytope HalfspacePolytope::whole_space(std::size_t dim) {
  return HalfspacePolytope(Eigen::MatrixXd(0, static_cast<Eigen::Index>(dim)), Eigen::VectorXd(0));
}

HalfspacePolytope HalfspacePolytope::cube(std::size_t dim, double radius) {
  const auto n = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd a(2 * n, n);
  a << Eigen::MatrixXd::Identity(n, n), -Eigen::MatrixXd::Identity(n, n);
  return HalfspacePolytope(std::move(a), Eigen::VectorXd::Constant(2 * n, radius));
}

HalfspacePolytope HalfspacePolytope::box(const Box& box) {
  const auto n = static_cast<Eigen::Index>(box.dim());
  Eigen::MatrixXd a(2 * n, n);
  a << Eigen::MatrixXd::Identity(n, n), -Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd b(2 * n);
  b << box.hi, -box.lo;
  return HalfspacePolytope(std::move(a), std::move(b));
}

double HalfspacePolytope::max_violation(const State& x) const {
  if (static_cast<std::size_t>(x.size()) != dim_) {
    throw PreconditionError(fmt::format("point has length {}, polytope dimension is {}", x.size(), dim_));
  }
  const simd::RowView view{std::span<const double>(a_.data(), static_cast<std::size_t>(a_.size())),
                           std::span<const double>(b_.data(), static_cast<std::size_t>(b_.size())), rows(), dim_};
  return simd::max_row_residual(view, std::span<const double>(x.data(), dim_));
}

bool HalfspacePolytope::contains(const State& x, double tol) const {
  if (tol < 0.0) throw PreconditionError("membership tolerance must be non-negative");
  return max_violation(x) <= tol;
}

std::optional<State> HalfspacePolytope::feasible_point() const {
  if (rows() == 0) return State::Zero(static_cast<Eigen::Index>(dim_));
  const lp::Result r = lp::find_feasible(a_, b_, kFeasibilityTol);
  if (r.status == lp::Status::infeasible) return std::nullopt;
  return r.x;
}

bool HalfspacePolytope::is_empty() const { return !feasible_point().has_value(); }

Box HalfspacePolytope::bounding_box(double clip) const {
  const auto n = static_cast<Eigen::Index>(dim_);
  Box box{State::Constant(n, -clip), State::Constant(n, clip)};
  if (rows() == 0) return box;
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    c[j] = 1.0;
    const lp::Result lower = lp::minimize(c, a_, b_, kFeasibilityTol);
    if (lower.status == lp::Status::infeasible) throw PreconditionError("bounding box of an empty polytope");
    if (lower.status == lp::Status::optimal) box.lo[j] = lower.x[j];
    c[j] = -1.0;
    const lp::Result upper = lp::minimize(c, a_, b_, kFeasibilityTol);
    if (upper.status == lp::Status::optimal) box.hi[j] = upper.x[j];
  }
  return box;
}

bool HalfspacePolytope::operator==(const HalfspacePolytope& other) const {
  return dim_ == other.dim_ && a_.rows() == other.a_.rows() && a_ == other.a_ && b_ == other.b_;
}

HalfspacePolytope intersect(std::span<const HalfspacePolytope> polytopes) {
  if (polytopes.empty()) throw PreconditionError("intersection of an empty list");
  const std::size_t dim = polytopes.front().dim();
  Eigen::Index total = 0;
  for (const auto& p : polytopes) {
    if (p.dim() != dim) {
      throw PreconditionError(fmt::format("cannot intersect polytopes of dimension {} and {}", dim, p.dim()));
    }
    total += static_cast<Eigen::Index>(p.rows());
  }
  Eigen::MatrixXd a(total, static_cast<Eigen::Index>(dim));
  Eigen::VectorXd b(total);
  Eigen::Index at = 0;
  for (const auto& p : polytopes) {
    const auto r = static_cast<Eigen::Index>(p.rows());
    a.middleRows(at, r) = p.a();
    b.segment(at, r) = p.b();
    at += r;
  }
  return HalfspacePolytope(std::move(a), std::move(b));
}

void to_json(nlohmann::json& j, const HalfspacePolytope& p) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < p.a().rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < p.a().cols(); ++k) row.push_back(p.a()(i, k));
    rows.push_back(std::move(row));
  }
  j = nlohmann::json{{"A", std::move(rows)}, {"b", std::vector<double>(p.b().data(), p.b().data() + p.b().size())},
                     {"dim", p.dim()}};
}

HalfspacePolytope polytope_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("A") || !j.contains("b")) {
    throw PreconditionError("polytope JSON needs \"A\" and \"b\"");
  }
  const auto& rows = j.at("A");
  const auto& bounds = j.at("b");
  if (!rows.is_array() || !bounds.is_array() || rows.size() != bounds.size()) {
    throw PreconditionError("polytope JSON: \"A\" and \"b\" must be arrays of equal length");
  }
  std::size_t dim = 0;
  if (j.contains("dim")) {
    dim = j.at("dim").get<std::size_t>();
  } else if (!rows.empty()) {
    dim = rows.front().size();
  } else {
    throw PreconditionError("polytope JSON with no rows needs \"dim\"");
  }
  Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  Eigen::VectorXd b(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != dim) {
      throw PreconditionError(fmt::format("polytope JSON: row {} does not have {} entries", i, dim));
    }
    for (std::size_t k = 0; k < dim; ++k) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k].get<double>();
    b[static_cast<Eigen::Index>(i)] = bounds[i].get<double>();
  }
  return HalfspacePolytope(std::move(a), std::move(b));
}

}  // namespace roa
