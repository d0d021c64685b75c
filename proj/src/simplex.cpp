#include "roa/simplex.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <vector>

#include "roa/error.hpp"

namespace roa::lp {

namespace {

constexpr double kPivotEps = 1e-11;

// Columns: x+ (n), x- (n), slacks (m), artificials (k). Last column is the
// right-hand side. Row m is the objective row holding reduced costs.
class Tableau {
 public:
  Tableau(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) : m_(a.rows()), n_(a.cols()) {
    std::vector<Eigen::Index> needs_artificial;
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (b[i] < 0.0) needs_artificial.push_back(i);
    }
    k_ = static_cast<Eigen::Index>(needs_artificial.size());
    cols_ = 2 * n_ + m_ + k_;
    t_ = Eigen::MatrixXd::Zero(m_ + 1, cols_ + 1);
    basis_.resize(static_cast<std::size_t>(m_));

    Eigen::Index art = 0;
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double sign = b[i] < 0.0 ? -1.0 : 1.0;
      t_.block(i, 0, 1, n_) = sign * a.row(i);
      t_.block(i, n_, 1, n_) = -sign * a.row(i);
      t_(i, 2 * n_ + i) = sign;
      t_(i, cols_) = sign * b[i];
      if (sign < 0.0) {
        const Eigen::Index col = 2 * n_ + m_ + art++;
        t_(i, col) = 1.0;
        basis_[static_cast<std::size_t>(i)] = col;
      } else {
        basis_[static_cast<std::size_t>(i)] = 2 * n_ + i;
      }
    }
  }

  Eigen::Index first_artificial() const { return 2 * n_ + m_; }
  Eigen::Index artificial_count() const { return k_; }

  // Loads "minimize cost . vars" into the objective row, priced out
  // against the current basis.
  void set_objective(const Eigen::VectorXd& cost) {
    t_.row(m_).setZero();
    t_.row(m_).head(cols_) = cost.transpose();
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double cb = cost[basis_[static_cast<std::size_t>(i)]];
      if (cb != 0.0) t_.row(m_) -= cb * t_.row(i);
    }
  }

  // Bland's rule. Columns >= allowed_cols never enter.
  Status optimize(Eigen::Index allowed_cols, int& pivots) {
    const double scale = std::max(1.0, t_.topRightCorner(m_, 1).lpNorm<Eigen::Infinity>());
    for (;;) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < allowed_cols; ++j) {
        if (t_(m_, j) < -kPivotEps * scale) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return Status::optimal;

      Eigen::Index leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m_; ++i) {
        const double coef = t_(i, enter);
        if (coef > kPivotEps) {
          const double ratio = t_(i, cols_) / coef;
          if (ratio < best_ratio - 1e-12 * std::max(1.0, std::abs(best_ratio)) ||
              (std::abs(ratio - best_ratio) <= 1e-12 * std::max(1.0, std::abs(best_ratio)) &&
               basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
            best_ratio = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) return Status::unbounded;
      pivot(leave, enter);
      ++pivots;
    }
  }

  void pivot(Eigen::Index row, Eigen::Index col) {
    t_.row(row) /= t_(row, col);
    for (Eigen::Index i = 0; i <= m_; ++i) {
      if (i != row) {
        const double factor = t_(i, col);
        if (factor != 0.0) t_.row(i) -= factor * t_.row(row);
      }
    }
    basis_[static_cast<std::size_t>(row)] = col;
  }

  // After phase 1, pivots any artificial still basic (at zero level) onto a
  // structural column. Rows with no such column are redundant and stay.
  void expel_artificials() {
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (basis_[static_cast<std::size_t>(i)] < first_artificial()) continue;
      for (Eigen::Index j = 0; j < first_artificial(); ++j) {
        if (std::abs(t_(i, j)) > 1e-9) {
          pivot(i, j);
          break;
        }
      }
    }
  }

  double objective_value() const { return -t_(m_, cols_); }

  Eigen::VectorXd point() const {
    Eigen::VectorXd vars = Eigen::VectorXd::Zero(cols_);
    for (Eigen::Index i = 0; i < m_; ++i) vars[basis_[static_cast<std::size_t>(i)]] = t_(i, cols_);
    return vars.head(n_) - vars.segment(n_, n_);
  }

  Eigen::Index cols() const { return cols_; }
  Eigen::Index n() const { return n_; }

 private:
  Eigen::Index m_, n_, k_ = 0, cols_ = 0;
  Eigen::MatrixXd t_;
  std::vector<Eigen::Index> basis_;
};

void check_shapes(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  if (a.rows() != b.size()) {
    throw PreconditionError(fmt::format("LP has {} rows but {} bounds", a.rows(), b.size()));
  }
}

// Returns false if infeasible.
bool phase_one(Tableau& tab, Result& result, double tol) {
  if (tab.artificial_count() == 0) return true;
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(tab.cols());
  cost.tail(tab.artificial_count()).setOnes();
  tab.set_objective(cost);
  tab.optimize(tab.cols(), result.pivots);
  if (tab.objective_value() > tol) {
    result.status = Status::infeasible;
    result.objective = tab.objective_value();
    return false;
  }
  tab.expel_artificials();
  return true;
}

}  // namespace

Result find_feasible(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double tol) {
  check_shapes(a, b);
  Result result;
  Tableau tab(a, b);
  if (!phase_one(tab, result, tol)) return result;
  result.status = Status::optimal;
  result.x = tab.point();
  result.objective = 0.0;
  return result;
}

Result minimize(const Eigen::VectorXd& c, const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double tol) {
  check_shapes(a, b);
  if (c.size() != a.cols()) throw PreconditionError("objective length must equal the variable count");
  Result result;
  Tableau tab(a, b);
  if (!phase_one(tab, result, tol)) return result;

  Eigen::VectorXd cost = Eigen::VectorXd::Zero(tab.cols());
  cost.head(tab.n()) = c;
  cost.segment(tab.n(), tab.n()) = -c;
  tab.set_objective(cost);
  result.status = tab.optimize(tab.first_artificial(), result.pivots);
  result.x = tab.point();
  result.objective = c.dot(result.x);
  return result;
}

}  // namespace roa::lp
