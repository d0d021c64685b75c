#pragma once

// Independent reference checks shared by the unit tests and the acceptance
// runner. None of them call the code they are used to check.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <random>
#include <vector>

#include "roa/dynsys.hpp"

namespace roa::oracle {

/// Row-by-row conjunction a_i . x <= b_i + tol, summing left to right.
inline bool conjunction(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const State& x, double tol) {
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) acc = acc + a(i, j) * x(j);
    if (!(acc - b(i) <= tol)) return false;
  }
  return true;
}

struct RandomPolytope {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  bool empty_by_construction = false;
};

/// Either contains a ball of radius >= 0.3 inside [-1, 1]^dim, or carries a
/// pair of rows a.x <= beta, -a.x <= -beta - gap that no point satisfies.
/// Always includes the cube |x_i| <= 1.
inline RandomPolytope random_small_polytope(std::mt19937_64& rng, std::size_t dim, bool make_empty) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(dim);
  const auto extra = static_cast<Eigen::Index>(2 + rng() % 7);
  const Eigen::Index rows = 2 * n + extra + (make_empty ? 2 : 0);
  RandomPolytope p;
  p.a = Eigen::MatrixXd::Zero(rows, n);
  p.b = Eigen::VectorXd::Zero(rows);
  p.a.topRows(n) = Eigen::MatrixXd::Identity(n, n);
  p.a.middleRows(n, n) = -Eigen::MatrixXd::Identity(n, n);
  p.b.head(2 * n).setOnes();
  Eigen::VectorXd c(n);
  for (Eigen::Index j = 0; j < n; ++j) c(j) = u(rng) - 0.5;
  for (Eigen::Index i = 2 * n; i < 2 * n + extra; ++i) {
    Eigen::RowVectorXd row(n);
    for (Eigen::Index j = 0; j < n; ++j) row(j) = g(rng);
    row /= row.norm();
    p.a.row(i) = row;
    p.b(i) = row.dot(c) + 0.3 + 0.7 * u(rng);
  }
  if (make_empty) {
    Eigen::RowVectorXd row(n);
    for (Eigen::Index j = 0; j < n; ++j) row(j) = g(rng);
    row /= row.norm();
    const double beta = 2.0 * u(rng) - 1.0;
    const double gap = 0.01 + 0.5 * u(rng);
    p.a.row(rows - 2) = row;
    p.b(rows - 2) = beta;
    p.a.row(rows - 1) = -row;
    p.b(rows - 1) = -beta - gap;
    p.empty_by_construction = true;
  }
  return p;
}

/// Uniform draws in [-1, 1]^dim until one satisfies every row.
inline std::optional<State> rejection_witness(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, std::uint64_t seed,
                                              std::size_t draws) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  State x(a.cols());
  for (std::size_t k = 0; k < draws; ++k) {
    for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = u(rng);
    if (conjunction(a, b, x, 0.0)) return x;
  }
  return std::nullopt;
}

/// Brute-force first exit: walk the grid t_k = k dt and return the index of
/// the first sample outside, or none.
template <typename Inside>
std::optional<std::size_t> first_exit(std::size_t steps, Inside&& inside) {
  for (std::size_t k = 0; k <= steps; ++k) {
    if (!inside(k)) return k;
  }
  return std::nullopt;
}

}  // namespace roa::oracle
