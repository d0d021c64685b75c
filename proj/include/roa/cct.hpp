#pragma once

// Critical clearing time screening: the angle-difference polytope around the
// post-fault equilibrium, the first-exit scan of the fault-on trajectory,
// and a time-domain bisection used as the reference.

#include <json.hpp>

#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "roa/invariance.hpp"
#include "roa/powersys.hpp"

namespace roa::cct {

struct RoaOptions {
  /// Also bound each machine-1-referenced angle, |y_i - ys_i| <= bound.
  bool per_angle_bounds = true;
  double bound = std::numbers::pi;
};

class NoPostFaultSep : public Error {
 public:
  using Error::Error;
};

/// Stable equilibrium of the reduced angle model (angles relative to machine
/// 1), found by Newton from `guess`.
State solve_angle_equilibrium(const power::ReducedSystem& sys, const State& guess, power::SwingOptions swing = {});

/// Omega_e over y_k = delta_{k+1} - delta_1: |(y_i - ys_i) - (y_j - ys_j)| <=
/// bound for 1 < i < j, plus the per-angle rows when enabled. One
/// individual set per machine pair; the equilibrium is ys.
CandidateRoa build_power_roa(const power::ReducedSystem& post_fault, const State& guess_diffs,
                             const RoaOptions& options = {}, power::SwingOptions swing = {});

/// Maps (delta, omega) to machine-1-referenced angles, by matrix and by
/// direct subtraction. Both give identical results.
Eigen::MatrixXd angle_projection(std::size_t n_mach);
State project_angles(const State& full_state, std::size_t n_mach);

/// Everything that depends on the case but not on the contingency.
struct CaseStudy {
  power::PowerCase power_case;
  power::PowerFlowSolution flow;
  power::ReducedSystem pre_fault;
  power::SwingOptions swing;
  State pre_fault_angles;  // full delta vector, machine 1 at its internal angle

  static CaseStudy prepare(power::PowerCase c, power::SwingOptions swing = {});
  std::size_t n_mach() const { return pre_fault.n_mach; }
  State initial_state() const;  // (delta0, 0)
  State pre_fault_diffs() const;
};

struct FaultOnTrajectory {
  Trajectory trajectory;
  bool diverged = false;
  double diverged_at = 0.0;
};

/// Fixed-step RK4 of the fault-on swing model from the pre-fault
/// equilibrium. Divergence ends the trajectory early and is recorded.
FaultOnTrajectory fault_on_trajectory(const CaseStudy& study, const power::Contingency& k, double dt, double t_max);

enum class Status { ok, polytope_empty, never_exits, starts_outside, no_postfault_sep, failed };
enum class OracleStatus { ok, no_cct, unstable_at_zero, not_run };

std::string status_name(Status s);
Status status_from_name(const std::string& s);
std::string oracle_status_name(OracleStatus s);
OracleStatus oracle_status_from_name(const std::string& s);

struct CctResult {
  power::Contingency contingency;
  double t_c_polytope = 0.0;
  double t_c_oracle = 0.0;
  OracleStatus oracle_status = OracleStatus::not_run;
  State exit_state;  // projected angles at the first outside sample
  double dt = 0.0;
  Status status = Status::failed;
  std::string message;

  bool conservative() const;
};

/// Scans t = 0, dt, 2 dt, ... <= t_max and stops at the first sample whose
/// projection leaves Omega_e; t_c is the sample before it. A trajectory
/// already in the polytope's coordinates is scanned as is; a (delta, omega)
/// trajectory is projected first.
CctResult polytope_exit_cct(const CandidateRoa& roa, const Trajectory& traj, double dt, double t_max);

struct OracleResult {
  double t_c = 0.0;
  OracleStatus status = OracleStatus::ok;
};

/// Post-fault run from the fault-on state at clearing time t is unstable
/// once some pair drifts more than pi from its equilibrium separation within
/// t_max seconds. Bisection over clearing times on the dt grid down to tol.
OracleResult bisection_cct_oracle(const CaseStudy& study, const power::Contingency& k, double dt, double t_max,
                                  double tol);

struct ScreenOptions {
  double dt = 1e-3;
  double t_max = 5.0;
  double tol = 1e-3;
  RoaOptions roa;
  bool run_oracle = true;
  unsigned jobs = 0;
};

/// Full pipeline for one contingency; failures land in status/message.
CctResult assess(const CaseStudy& study, const power::Contingency& k, const ScreenOptions& options = {});

/// One result per contingency, in input order.
std::vector<CctResult> screen(const CaseStudy& study, const std::vector<power::Contingency>& contingencies,
                              const ScreenOptions& options = {});

/// Seeded distinct contingencies drawn from every (branch, faulted end)
/// pair whose branch removal keeps the network connected, skipping those in
/// `exclude`. Returns fewer than `count` when the pool runs out.
std::vector<power::Contingency> random_contingencies(const power::PowerCase& c, std::size_t count,
                                                     std::uint64_t seed,
                                                     const std::vector<power::Contingency>& exclude = {});

std::string results_to_csv(const std::vector<CctResult>& results);
nlohmann::json results_to_json(const std::vector<CctResult>& results);
std::vector<CctResult> results_from_json(const nlohmann::json& j);

}  // namespace roa::cct
