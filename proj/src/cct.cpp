#include "roa/cct.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "roa/log.hpp"
#include "roa/parallel.hpp"

namespace roa::cct {

using power::Contingency;
using power::ReducedSystem;
using power::Topology;

namespace {

std::size_t grid_steps(double t_max, double dt) { return static_cast<std::size_t>(std::floor(t_max / dt + 1e-9)); }

// Sample at t, tolerating the sub-nanosecond snap of a trajectory's end time.
State sample_at(const Trajectory& traj, double t) {
  if (t > traj.end_time() && t - traj.end_time() < 1e-9) return traj.final_state();
  return traj.state_at(t);
}

void check_grid(double dt, double t_max) {
  if (!(dt > 0.0)) throw PreconditionError("dt must be positive");
  if (!(t_max >= 0.0)) throw PreconditionError("t_max must be non-negative");
}

}  // namespace

State solve_angle_equilibrium(const ReducedSystem& sys, const State& guess, power::SwingOptions swing) {
  const VectorField field = power::reduced_angle_field(sys, swing).composite();
  State sep;
  try {
    sep = equilibrium_solve(field, guess, 1e-10);
  } catch (const NoEquilibriumFound& e) {
    throw NoPostFaultSep(fmt::format("no post-fault equilibrium: {}", e.what()));
  }
  const Eigen::VectorXcd eig = numerical_jacobian(field, sep).eigenvalues();
  if (eig.real().maxCoeff() >= 0.0) {
    throw NoPostFaultSep(
        fmt::format("post-fault equilibrium is not stable (largest eigenvalue real part {:.3g})", eig.real().maxCoeff()));
  }
  return sep;
}

CandidateRoa build_power_roa(const ReducedSystem& post_fault, const State& guess_diffs, const RoaOptions& options,
                             power::SwingOptions swing) {
  if (!(options.bound > 0.0)) throw PreconditionError("polytope bound must be positive");
  const std::size_t n = post_fault.n_mach;
  if (n < 2) throw PreconditionError("need at least two machines");
  if (static_cast<std::size_t>(guess_diffs.size()) != n - 1) throw PreconditionError("guess has the wrong size");
  const State ys = solve_angle_equilibrium(post_fault, guess_diffs, swing);
  const auto dim = static_cast<Eigen::Index>(n - 1);

  std::vector<IndividualInvariantSet> sets;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(dim);
      double centre = 0.0;
      if (i == 0) {
        if (!options.per_angle_bounds) continue;
        row(static_cast<Eigen::Index>(j - 1)) = 1.0;
        centre = ys(static_cast<Eigen::Index>(j - 1));
      } else {
        row(static_cast<Eigen::Index>(i - 1)) = 1.0;
        row(static_cast<Eigen::Index>(j - 1)) = -1.0;
        centre = ys(static_cast<Eigen::Index>(i - 1)) - ys(static_cast<Eigen::Index>(j - 1));
      }
      Eigen::MatrixXd a(2, dim);
      a.row(0) = row;
      a.row(1) = -row;
      Eigen::VectorXd b(2);
      b << options.bound + centre, options.bound - centre;
      sets.push_back({HalfspacePolytope(a, b), LimitSet::point(ys, "post-fault equilibrium")});
    }
  }
  if (sets.empty()) sets.push_back({HalfspacePolytope::whole_space(n - 1), LimitSet::point(ys)});
  return build_candidate(std::move(sets), ys);
}

Eigen::MatrixXd angle_projection(std::size_t n_mach) {
  if (n_mach < 2) throw PreconditionError("need at least two machines");
  const auto n = static_cast<Eigen::Index>(n_mach);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n - 1, 2 * n);
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    p(k, k + 1) = 1.0;
    p(k, 0) = -1.0;
  }
  return p;
}

State project_angles(const State& full_state, std::size_t n_mach) {
  if (n_mach < 2 || static_cast<std::size_t>(full_state.size()) != 2 * n_mach) {
    throw PreconditionError(fmt::format("projection dimension mismatch: state of size {} for {} machines",
                                        full_state.size(), n_mach));
  }
  const auto n = static_cast<Eigen::Index>(n_mach);
  return full_state.segment(1, n - 1).array() - full_state(0);
}

// ---------------------------------------------------------------------------

CaseStudy CaseStudy::prepare(power::PowerCase c, power::SwingOptions swing) {
  CaseStudy s;
  s.power_case = std::move(c);
  s.swing = swing;
  s.flow = power::power_flow(s.power_case);
  s.pre_fault = power::kron_reduce(s.power_case, s.flow, Topology::pre_fault());
  const Eigen::VectorXd theta = s.pre_fault.internal_angles();
  const auto n = theta.size();
  if (n < 2) throw PreconditionError("need at least two machines");
  const State guess = theta.tail(n - 1).array() - theta(0);
  const State y = solve_angle_equilibrium(s.pre_fault, guess, swing);
  s.pre_fault_angles.resize(n);
  s.pre_fault_angles(0) = theta(0);
  s.pre_fault_angles.tail(n - 1) = y.array() + theta(0);
  return s;
}

State CaseStudy::initial_state() const {
  const auto n = pre_fault_angles.size();
  State x = State::Zero(2 * n);
  x.head(n) = pre_fault_angles;
  return x;
}

State CaseStudy::pre_fault_diffs() const {
  const auto n = pre_fault_angles.size();
  return pre_fault_angles.tail(n - 1).array() - pre_fault_angles(0);
}

FaultOnTrajectory fault_on_trajectory(const CaseStudy& study, const Contingency& k, double dt, double t_max) {
  check_grid(dt, t_max);
  const ReducedSystem sys = power::kron_reduce(study.power_case, study.flow, Topology::fault_on(k));
  const DecomposedField field = power::swing_field(sys, study.swing);
  FaultOnTrajectory out;
  try {
    out.trajectory = integrate(field, study.initial_state(), t_max, IntegratorConfig::fixed(dt));
  } catch (const IntegrationDiverged& e) {
    out.trajectory = e.partial();
    out.diverged = true;
    out.diverged_at = e.time();
    log().info("fault-on trajectory for {} diverged at t = {:.4f}", k.spec(), e.time());
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string status_name(Status s) {
  switch (s) {
    case Status::ok:
      return "ok";
    case Status::polytope_empty:
      return "polytope_empty";
    case Status::never_exits:
      return "never_exits";
    case Status::starts_outside:
      return "starts_outside";
    case Status::no_postfault_sep:
      return "no_postfault_sep";
    case Status::failed:
      break;
  }
  return "failed";
}

Status status_from_name(const std::string& s) {
  for (Status v : {Status::ok, Status::polytope_empty, Status::never_exits, Status::starts_outside,
                   Status::no_postfault_sep, Status::failed}) {
    if (status_name(v) == s) return v;
  }
  throw PreconditionError(fmt::format("unknown status '{}'", s));
}

std::string oracle_status_name(OracleStatus s) {
  switch (s) {
    case OracleStatus::ok:
      return "ok";
    case OracleStatus::no_cct:
      return "no_cct";
    case OracleStatus::unstable_at_zero:
      return "unstable_at_zero";
    case OracleStatus::not_run:
      break;
  }
  return "not_run";
}

OracleStatus oracle_status_from_name(const std::string& s) {
  for (OracleStatus v : {OracleStatus::ok, OracleStatus::no_cct, OracleStatus::unstable_at_zero, OracleStatus::not_run}) {
    if (oracle_status_name(v) == s) return v;
  }
  throw PreconditionError(fmt::format("unknown oracle status '{}'", s));
}

bool CctResult::conservative() const {
  return status == Status::ok && oracle_status == OracleStatus::ok && t_c_polytope <= t_c_oracle;
}

CctResult polytope_exit_cct(const CandidateRoa& roa, const Trajectory& traj, double dt, double t_max) {
  check_grid(dt, t_max);
  CctResult r;
  r.dt = dt;
  if (roa.omega_e.is_empty()) {
    r.status = Status::polytope_empty;
    r.message = "Omega_e is empty";
    return r;
  }
  if (traj.empty()) throw PreconditionError("empty trajectory");
  const std::size_t dim = roa.dim();
  const bool project = traj.dim() != dim;
  if (project && traj.dim() != 2 * (dim + 1)) {
    throw PreconditionError(
        fmt::format("projection dimension mismatch: trajectory dim {} against polytope dim {}", traj.dim(), dim));
  }
  auto coords = [&](const State& x) { return project ? project_angles(x, dim + 1) : x; };

  // Samples past the end of a trajectory that stopped early (a diverged
  // fault-on run) count as outside.
  const std::size_t steps = grid_steps(t_max, dt);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const bool covered = t <= traj.end_time() + 1e-9;
    const State y = coords(covered ? sample_at(traj, t) : traj.final_state());
    if (covered && roa.omega_e.contains(y)) continue;
    r.exit_state = y;
    if (k == 0) {
      r.status = Status::starts_outside;
      r.message = "the trajectory starts outside Omega_e";
      return r;
    }
    r.status = Status::ok;
    r.t_c_polytope = static_cast<double>(k - 1) * dt;
    return r;
  }
  r.status = Status::never_exits;
  r.t_c_polytope = static_cast<double>(steps) * dt;
  return r;
}

// ---------------------------------------------------------------------------

namespace {

// Largest |(d_i - d_j) - (s_i - s_j)| over machine pairs, with d and s both
// referenced to machine 1.
double max_separation_drift(const State& x, const State& sep_diffs) {
  const auto n = sep_diffs.size() + 1;
  double hi = 0.0;
  double lo = 0.0;
  for (Eigen::Index i = 1; i < n; ++i) {
    const double r = (x(i) - x(0)) - sep_diffs(i - 1);
    hi = std::max(hi, r);
    lo = std::min(lo, r);
  }
  return hi - lo;
}

OracleResult run_oracle(const CaseStudy& study, const ReducedSystem& post, const State& sep_diffs,
                        const FaultOnTrajectory& fault, double dt, double t_max, double tol) {
  if (!(tol >= dt - 1e-12)) throw PreconditionError("oracle tolerance must be at least dt");
  const VectorField field = power::swing_field(post, study.swing).composite();
  const double threshold = std::numbers::pi;
  const Trajectory& traj = fault.trajectory;

  auto stable = [&](std::size_t k) {
    const double t = static_cast<double>(k) * dt;
    if (t > traj.end_time() + 1e-9) return false;
    const State x0 = sample_at(traj, t);
    if (max_separation_drift(x0, sep_diffs) > threshold) return false;
    bool lost = false;
    try {
      integrate(field, x0, t_max, IntegratorConfig::fixed(dt), [&](double, const State& x) {
        lost = max_separation_drift(x, sep_diffs) > threshold;
        return !lost;
      });
    } catch (const IntegrationDiverged&) {
      return false;
    }
    return !lost;
  };

  const std::size_t steps = grid_steps(t_max, dt);
  if (!stable(0)) return {0.0, OracleStatus::unstable_at_zero};
  if (stable(steps)) return {static_cast<double>(steps) * dt, OracleStatus::no_cct};
  const auto gap = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(tol / dt)));
  std::size_t lo = 0;
  std::size_t hi = steps;
  while (hi - lo > gap) {
    const std::size_t mid = lo + (hi - lo) / 2;
    (stable(mid) ? lo : hi) = mid;
  }
  return {static_cast<double>(lo) * dt, OracleStatus::ok};
}

}  // namespace

OracleResult bisection_cct_oracle(const CaseStudy& study, const Contingency& k, double dt, double t_max, double tol) {
  check_grid(dt, t_max);
  power::validate_contingency(study.power_case, k);
  const ReducedSystem post = power::kron_reduce(study.power_case, study.flow, Topology::post_fault(k));
  const State sep = solve_angle_equilibrium(post, study.pre_fault_diffs(), study.swing);
  const FaultOnTrajectory fault = fault_on_trajectory(study, k, dt, t_max);
  return run_oracle(study, post, sep, fault, dt, t_max, tol);
}

CctResult assess(const CaseStudy& study, const Contingency& k, const ScreenOptions& options) {
  CctResult r;
  r.contingency = k;
  r.dt = options.dt;
  try {
    check_grid(options.dt, options.t_max);
    power::validate_contingency(study.power_case, k);
    const ReducedSystem post = power::kron_reduce(study.power_case, study.flow, Topology::post_fault(k));
    const CandidateRoa roa = build_power_roa(post, study.pre_fault_diffs(), options.roa, study.swing);
    const FaultOnTrajectory fault = fault_on_trajectory(study, k, options.dt, options.t_max);
    CctResult scan = polytope_exit_cct(roa, fault.trajectory, options.dt, options.t_max);
    scan.contingency = k;
    r = std::move(scan);
    if (options.run_oracle) {
      const OracleResult o = run_oracle(study, post, roa.equilibrium, fault, options.dt, options.t_max, options.tol);
      r.t_c_oracle = o.t_c;
      r.oracle_status = o.status;
    }
  } catch (const NoPostFaultSep& e) {
    r.status = Status::no_postfault_sep;
    r.message = e.what();
  } catch (const EmptyIntersection& e) {
    r.status = Status::polytope_empty;
    r.message = e.what();
  } catch (const std::exception& e) {
    r.status = Status::failed;
    r.message = e.what();
  }
  log().info("{}: {} t_c = {:.4f}, oracle {} {:.4f}", k.spec(), status_name(r.status), r.t_c_polytope,
             oracle_status_name(r.oracle_status), r.t_c_oracle);
  return r;
}

std::vector<CctResult> screen(const CaseStudy& study, const std::vector<Contingency>& contingencies,
                              const ScreenOptions& options) {
  std::vector<CctResult> out(contingencies.size());
  parallel_for(contingencies.size(), options.jobs,
               [&](std::size_t i) { out[i] = assess(study, contingencies[i], options); });
  return out;
}

std::vector<Contingency> random_contingencies(const power::PowerCase& c, std::size_t count, std::uint64_t seed,
                                              const std::vector<Contingency>& exclude) {
  auto same = [](const Contingency& a, const Contingency& b) {
    return a.faulted_bus == b.faulted_bus &&
           ((a.from == b.from && a.to == b.to) || (a.from == b.to && a.to == b.from));
  };
  // Every (non-bridge branch, faulted end) pair not already listed.
  std::vector<Contingency> candidates;
  for (std::size_t i = 0; i < c.branches.size(); ++i) {
    const power::Branch& br = c.branches[i];
    if (!br.in_service || !power::is_connected(c, i)) continue;
    for (int end : {br.from, br.to}) {
      const Contingency k{end, br.from, br.to};
      if (std::none_of(exclude.begin(), exclude.end(), [&](const Contingency& e) { return same(e, k); })) {
        candidates.push_back(k);
      }
    }
  }
  std::mt19937_64 rng(seed);
  std::vector<Contingency> out;
  while (out.size() < count && !candidates.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    const std::size_t slot = pick(rng);
    out.push_back(candidates[slot]);
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(slot));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string results_to_csv(const std::vector<CctResult>& results) {
  std::string out = "faulted_bus,tripped_line,t_c_polytope,t_c_oracle,status\n";
  for (const CctResult& r : results) {
    const bool has_poly = r.status == Status::ok || r.status == Status::never_exits;
    const bool has_oracle = r.oracle_status != OracleStatus::not_run;
    std::string status = status_name(r.status);
    if (has_oracle && r.oracle_status != OracleStatus::ok) status += "/" + oracle_status_name(r.oracle_status);
    out += fmt::format("{},{},{},{},{}\n", r.contingency.faulted_bus, r.contingency.line(),
                       has_poly ? fmt::format("{:.6f}", r.t_c_polytope) : "",
                       has_oracle ? fmt::format("{:.6f}", r.t_c_oracle) : "", status);
  }
  return out;
}

nlohmann::json results_to_json(const std::vector<CctResult>& results) {
  nlohmann::json arr = nlohmann::json::array();
  for (const CctResult& r : results) {
    arr.push_back({{"faulted_bus", r.contingency.faulted_bus},
                   {"tripped_line", {r.contingency.from, r.contingency.to}},
                   {"t_c_polytope", r.t_c_polytope},
                   {"t_c_oracle", r.t_c_oracle},
                   {"oracle_status", oracle_status_name(r.oracle_status)},
                   {"exit_state", state_to_json(r.exit_state)},
                   {"dt", r.dt},
                   {"status", status_name(r.status)},
                   {"message", r.message}});
  }
  return arr;
}

std::vector<CctResult> results_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw PreconditionError("CCT results must be a JSON array");
  std::vector<CctResult> out;
  for (const auto& e : j) {
    CctResult r;
    r.contingency.faulted_bus = e.at("faulted_bus").get<int>();
    const auto line = e.at("tripped_line").get<std::vector<int>>();
    if (line.size() != 2) throw PreconditionError("tripped_line needs two bus ids");
    r.contingency.from = line[0];
    r.contingency.to = line[1];
    r.t_c_polytope = e.at("t_c_polytope").get<double>();
    r.t_c_oracle = e.at("t_c_oracle").get<double>();
    r.oracle_status = oracle_status_from_name(e.at("oracle_status").get<std::string>());
    const auto xs = e.at("exit_state").get<std::vector<double>>();
    r.exit_state = Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
    r.dt = e.at("dt").get<double>();
    r.status = status_from_name(e.at("status").get<std::string>());
    r.message = e.at("message").get<std::string>();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace roa::cct
