#pragma once

// Dense tableau simplex for small LPs over free variables:
//   minimize c.x  subject to  A x <= b.
// Two phases, Bland's rule throughout (no cycling).

#include <Eigen/Dense>

namespace roa::lp {

enum class Status { optimal, infeasible, unbounded };

struct Result {
  Status status = Status::infeasible;
  Eigen::VectorXd x;       // feasible (phase 1) or optimal (phase 2) point
  double objective = 0.0;  // c.x at x; phase-1 infeasibility for infeasible
  int pivots = 0;
};

/// Phase 1 only: a point with A x <= b (within tol), or infeasible.
Result find_feasible(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double tol = 1e-9);

/// Phase 1 then phase 2.
Result minimize(const Eigen::VectorXd& c, const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double tol = 1e-9);

}  // namespace roa::lp
