#include "roa/dynsys.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <utility>

namespace roa {

VectorField::VectorField(std::size_t dim, Function fn) : dim_(dim), fn_(std::move(fn)) {
  if (dim_ == 0) throw PreconditionError("vector field dimension must be positive");
  if (!fn_) throw PreconditionError("vector field needs an evaluation function");
}

State VectorField::operator()(const State& x) const {
  if (static_cast<std::size_t>(x.size()) != dim_) {
    throw PreconditionError(fmt::format("state has length {}, field expects {}", x.size(), dim_));
  }
  State dx = fn_(x);
  if (static_cast<std::size_t>(dx.size()) != dim_) {
    throw Error(fmt::format("vector field returned length {}, expected {}", dx.size(), dim_));
  }
  return dx;
}

DecomposedField::DecomposedField(std::vector<VectorField> parts, std::vector<std::string> labels,
                                 std::optional<VectorField> fused)
    : dim_(0), parts_(std::move(parts)), labels_(std::move(labels)), fused_(std::move(fused)) {
  if (parts_.empty()) throw PreconditionError("decomposed field needs at least one part");
  dim_ = parts_.front().dim();
  for (const auto& p : parts_) {
    if (p.dim() != dim_) throw PreconditionError("all parts of a decomposed field must share one dimension");
  }
  if (fused_ && fused_->dim() != dim_) throw PreconditionError("fused evaluator has the wrong dimension");
  if (labels_.empty()) {
    for (std::size_t k = 0; k < parts_.size(); ++k) labels_.push_back(fmt::format("f{}", k + 1));
  }
  if (labels_.size() != parts_.size()) throw PreconditionError("one label per part");
}

State DecomposedField::sum_of_parts(const State& x) const {
  State acc = parts_.front()(x);
  for (std::size_t k = 1; k < parts_.size(); ++k) {
    acc += parts_[k](x);
  }
  return acc;
}

State DecomposedField::operator()(const State& x) const { return fused_ ? (*fused_)(x) : sum_of_parts(x); }

VectorField DecomposedField::composite() const {
  if (fused_) return *fused_;
  return VectorField(dim_, [self = *this](const State& x) { return self.sum_of_parts(x); });
}

// ---------------------------------------------------------------------------

State Trajectory::state_at(double t) const {
  if (empty()) throw PreconditionError("empty trajectory");
  if (t < times.front() || t > times.back()) {
    throw PreconditionError(fmt::format("time {} outside trajectory span [{}, {}]", t, times.front(), times.back()));
  }
  auto it = std::lower_bound(times.begin(), times.end(), t);
  const auto hi = static_cast<std::size_t>(it - times.begin());
  if (times[hi] == t) return states[hi];
  const std::size_t lo = hi - 1;
  const double w = (t - times[lo]) / (times[hi] - times[lo]);
  return states[lo] + w * (states[hi] - states[lo]);
}

void Trajectory::push(double t, State x) {
  if (!times.empty() && !(t > times.back())) {
    throw Error(fmt::format("trajectory times must increase ({} after {})", t, times.back()));
  }
  times.push_back(t);
  states.push_back(std::move(x));
}

IntegratorConfig IntegratorConfig::fixed(double h) {
  IntegratorConfig cfg;
  cfg.method = Method::rk4;
  cfg.step = h;
  return cfg;
}

IntegratorConfig IntegratorConfig::adaptive(double rel_tol, double abs_tol, double initial_step) {
  IntegratorConfig cfg;
  cfg.method = Method::rk45;
  cfg.rel_tol = rel_tol;
  cfg.abs_tol = abs_tol;
  cfg.step = initial_step;
  return cfg;
}

void IntegratorConfig::validate() const {
  if (!(step > 0.0)) throw PreconditionError("integration step must be positive");
  if (method == Method::rk45 && !(rel_tol > 0.0 && abs_tol > 0.0)) {
    throw PreconditionError("adaptive tolerances must be positive");
  }
  if (!(divergence_bound > 0.0)) throw PreconditionError("divergence bound must be positive");
}

IntegrationDiverged::IntegrationDiverged(const std::string& what, Trajectory partial)
    : Error(what), partial_(std::move(partial)) {}

NoEquilibriumFound::NoEquilibriumFound(const std::string& what, State best, double residual)
    : Error(what), best_(std::move(best)), residual_(residual) {}

namespace {

bool all_finite(const State& x) { return x.allFinite(); }

class Integrator {
 public:
  Integrator(const VectorField& f, const IntegratorConfig& cfg, const StepObserver& observer)
      : f_(f), cfg_(cfg), observer_(observer) {}

  Trajectory run(const State& x0, double t_end) {
    traj_.push(0.0, x0);
    if (!observer_ || observer_(0.0, x0)) {
      if (cfg_.method == Method::rk4) {
        run_rk4(t_end);
      } else {
        run_rk45(t_end);
      }
    }
    return std::move(traj_);
  }

 private:
  State eval(const State& x, double t) {
    State dx = f_(x);
    if (!all_finite(dx)) {
      diverge(fmt::format("non-finite derivative at t = {}", t));
    }
    return dx;
  }

  [[noreturn]] void diverge(const std::string& why) { throw IntegrationDiverged(why, std::move(traj_)); }

  // Returns false if the observer asked to stop.
  bool accept(double t, State x) {
    if (!all_finite(x)) diverge(fmt::format("non-finite state at t = {}", t));
    if (x.lpNorm<Eigen::Infinity>() > cfg_.divergence_bound) {
      diverge(fmt::format("state norm exceeded {} at t = {}", cfg_.divergence_bound, t));
    }
    traj_.push(t, std::move(x));
    return !observer_ || observer_(traj_.times.back(), traj_.states.back());
  }

  void run_rk4(double t_end) {
    const double h = cfg_.step;
    const double ratio = t_end / h;
    auto full_steps = static_cast<long long>(std::llround(ratio));
    bool snapped = std::abs(ratio - static_cast<double>(full_steps)) <= 1e-9 * std::max(1.0, ratio);
    if (!snapped) full_steps = static_cast<long long>(std::floor(ratio));

    State x = traj_.states.back();
    for (long long k = 0; k < full_steps; ++k) {
      const double t = static_cast<double>(k) * h;
      x = rk4_step(x, t, h);
      const double t_next = (snapped && k + 1 == full_steps) ? t_end : static_cast<double>(k + 1) * h;
      if (!accept(t_next, x)) return;
    }
    if (!snapped) {
      const double t = static_cast<double>(full_steps) * h;
      const double last = t_end - t;
      if (last > 0.0) {
        x = rk4_step(x, t, last);
        accept(t_end, x);
      }
    }
  }

  State rk4_step(const State& x, double t, double h) {
    const State k1 = eval(x, t);
    const State k2 = eval(x + (0.5 * h) * k1, t);
    const State k3 = eval(x + (0.5 * h) * k2, t);
    const State k4 = eval(x + h * k3, t);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  void run_rk45(double t_end) {
    // Dormand-Prince 5(4), first-same-as-last.
    constexpr double a21 = 1.0 / 5.0;
    constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                     a54 = -212.0 / 729.0;
    constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                     a65 = -5103.0 / 18656.0;
    constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                     b6 = 11.0 / 84.0;
    constexpr double e1 = b1 - 5179.0 / 57600.0, e3 = b3 - 7571.0 / 16695.0, e4 = b4 - 393.0 / 640.0,
                     e5 = b5 - -92097.0 / 339200.0, e6 = b6 - 187.0 / 2100.0, e7 = -1.0 / 40.0;

    double t = 0.0;
    double h = std::min(cfg_.step, t_end);
    State x = traj_.states.back();
    State k1 = eval(x, t);
    while (t < t_end) {
      bool last = false;
      if (t + h >= t_end) {
        h = t_end - t;
        last = true;
      }
      const State k2 = eval(x + h * (a21 * k1), t);
      const State k3 = eval(x + h * (a31 * k1 + a32 * k2), t);
      const State k4 = eval(x + h * (a41 * k1 + a42 * k2 + a43 * k3), t);
      const State k5 = eval(x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), t);
      const State k6 = eval(x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), t);
      State x_new = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const State k7 = eval(x_new, t);
      const State err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      double norm = 0.0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double scale = cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(x[i]), std::abs(x_new[i]));
        const double r = err[i] / scale;
        norm += r * r;
      }
      norm = std::sqrt(norm / static_cast<double>(x.size()));

      if (norm <= 1.0) {
        t = last ? t_end : t + h;
        x = x_new;
        k1 = k7;
        if (!accept(t, x)) return;
        const double grow = norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
        h *= grow;
      } else {
        h *= std::max(0.2, 0.9 * std::pow(norm, -0.2));
      }
      if (h < 1e-14 * std::max(1.0, std::abs(t))) {
        diverge(fmt::format("step size underflow at t = {}", t));
      }
    }
  }

  const VectorField& f_;
  const IntegratorConfig& cfg_;
  const StepObserver& observer_;
  Trajectory traj_;
};

}  // namespace

Trajectory integrate(const VectorField& field, const State& x0, double t_end, const IntegratorConfig& cfg,
                     const StepObserver& observer) {
  cfg.validate();
  if (static_cast<std::size_t>(x0.size()) != field.dim()) {
    throw PreconditionError(fmt::format("initial state has length {}, field expects {}", x0.size(), field.dim()));
  }
  if (!(t_end > 0.0)) throw PreconditionError("integration horizon must be positive");
  return Integrator(field, cfg, observer).run(x0, t_end);
}

Trajectory integrate(const DecomposedField& field, const State& x0, double t_end, const IntegratorConfig& cfg,
                     const StepObserver& observer) {
  return integrate(field.composite(), x0, t_end, cfg, observer);
}

Eigen::MatrixXd numerical_jacobian(const VectorField& field, const State& x) {
  const auto n = static_cast<Eigen::Index>(field.dim());
  Eigen::MatrixXd jac(n, n);
  State probe = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double step = 1e-7 * (1.0 + std::abs(x[j]));
    probe[j] = x[j] + step;
    const State up = field(probe);
    probe[j] = x[j] - step;
    const State down = field(probe);
    probe[j] = x[j];
    jac.col(j) = (up - down) / (2.0 * step);
  }
  return jac;
}

State equilibrium_solve(const VectorField& field, const State& guess, double tol, int max_iterations) {
  if (static_cast<std::size_t>(guess.size()) != field.dim()) {
    throw PreconditionError(fmt::format("guess has length {}, field expects {}", guess.size(), field.dim()));
  }
  if (!(tol > 0.0)) throw PreconditionError("equilibrium tolerance must be positive");

  State x = guess;
  State fx = field(x);
  State best = x;
  double best_residual = fx.lpNorm<Eigen::Infinity>();

  for (int iter = 0; iter < max_iterations && std::isfinite(best_residual); ++iter) {
    const double residual = fx.lpNorm<Eigen::Infinity>();
    if (residual < best_residual) {
      best = x;
      best_residual = residual;
    }
    if (residual <= tol) return x;

    const Eigen::MatrixXd jac = numerical_jacobian(field, x);
    const State dx = jac.colPivHouseholderQr().solve(-fx);
    if (!dx.allFinite()) break;

    // Backtracking on 0.5 ||f||^2.
    const double merit = 0.5 * fx.squaredNorm();
    double lambda = 1.0;
    bool moved = false;
    while (lambda > 1e-10) {
      const State trial = x + lambda * dx;
      const State f_trial = field(trial);
      if (f_trial.allFinite() && 0.5 * f_trial.squaredNorm() <= (1.0 - 1e-4 * lambda) * merit) {
        x = trial;
        fx = f_trial;
        moved = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!moved) break;
  }

  const double residual = fx.lpNorm<Eigen::Infinity>();
  if (residual < best_residual) {
    best = x;
    best_residual = residual;
  }
  if (best_residual <= tol) return best;
  throw NoEquilibriumFound(fmt::format("no equilibrium found: best residual {:.3e} > tol {:.3e}", best_residual, tol),
                           best, best_residual);
}

}  // namespace roa
