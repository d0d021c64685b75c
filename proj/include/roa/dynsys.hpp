#pragma once

// Autonomous ODEs x' = f(x), fields stored as ordered sums of sub-fields,
// and the integrators used everywhere else in the library.

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "roa/error.hpp"

namespace roa {

using State = Eigen::VectorXd;

class VectorField {
 public:
  using Function = std::function<State(const State&)>;

  VectorField(std::size_t dim, Function fn);

  std::size_t dim() const { return dim_; }

  /// Evaluates f(x). Throws PreconditionError on a wrong-sized input.
  State operator()(const State& x) const;

 private:
  std::size_t dim_;
  Function fn_;
};

/// f = f^0 + f^1 + ... + f^{m-1}, summed in part order.
///
/// A producer may attach a fused evaluator for speed; it must return exactly
/// what the part-by-part sum returns (same operations, same order). The
/// swing-equation field does this and is tested for bitwise agreement.
class DecomposedField {
 public:
  explicit DecomposedField(std::vector<VectorField> parts, std::vector<std::string> labels = {},
                           std::optional<VectorField> fused = std::nullopt);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return parts_.size(); }
  const VectorField& part(std::size_t k) const { return parts_.at(k); }
  const std::string& label(std::size_t k) const { return labels_.at(k); }
  const std::vector<VectorField>& parts() const { return parts_; }

  /// Ordered part-by-part sum, ignoring any fused evaluator.
  State sum_of_parts(const State& x) const;

  /// Composite evaluation (fused evaluator when present).
  State operator()(const State& x) const;

  /// The composite field as a standalone VectorField.
  VectorField composite() const;

 private:
  std::size_t dim_;
  std::vector<VectorField> parts_;
  std::vector<std::string> labels_;
  std::optional<VectorField> fused_;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
  std::size_t dim() const { return states.empty() ? 0 : static_cast<std::size_t>(states.front().size()); }
  double end_time() const { return times.back(); }
  const State& final_state() const { return states.back(); }

  /// Linear interpolation between bracketing samples; exact sample when t
  /// hits a stored time. t must lie within [times.front(), times.back()].
  State state_at(double t) const;

  void push(double t, State x);
};

enum class Method { rk4, rk45 };

struct IntegratorConfig {
  Method method = Method::rk4;
  /// Fixed step for rk4, initial step for rk45.
  double step = 1e-3;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  /// Integration aborts once the infinity norm of the state exceeds this.
  double divergence_bound = 1e6;

  static IntegratorConfig fixed(double h);
  static IntegratorConfig adaptive(double rel_tol, double abs_tol, double initial_step = 1e-2);

  void validate() const;
};

/// Thrown on a non-finite derivative or when the divergence guard trips.
/// Carries everything integrated up to the last valid state.
class IntegrationDiverged : public Error {
 public:
  IntegrationDiverged(const std::string& what, Trajectory partial);

  double time() const { return partial_.end_time(); }
  const State& last_state() const { return partial_.final_state(); }
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

/// Called after every accepted step; returning false stops integration
/// early (the trajectory then ends at that step).
using StepObserver = std::function<bool(double t, const State& x)>;

/// Integrates x' = f(x) from (0, x0) to t_end. Fixed-step RK4 lands on
/// multiples of h (with a final partial step when t_end is not one);
/// adaptive RK45 uses Dormand-Prince coefficients. Every accepted step is
/// recorded.
Trajectory integrate(const VectorField& field, const State& x0, double t_end, const IntegratorConfig& cfg,
                     const StepObserver& observer = {});
Trajectory integrate(const DecomposedField& field, const State& x0, double t_end, const IntegratorConfig& cfg,
                     const StepObserver& observer = {});

class NoEquilibriumFound : public Error {
 public:
  NoEquilibriumFound(const std::string& what, State best, double residual);

  const State& best() const { return best_; }
  double residual() const { return residual_; }

 private:
  State best_;
  double residual_;
};

/// Damped Newton on f(x) = 0 with a central-difference Jacobian. The
/// returned point satisfies ||f(x)||_inf <= tol.
State equilibrium_solve(const VectorField& field, const State& guess, double tol, int max_iterations = 100);

/// Central-difference Jacobian, step 1e-7 * (1 + |x_i|) per coordinate.
Eigen::MatrixXd numerical_jacobian(const VectorField& field, const State& x);

}  // namespace roa
