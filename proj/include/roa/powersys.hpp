#pragma once

// Network data, Newton-Raphson power flow, Kron reduction to machine
// internal nodes, and the classical swing model.
//
// Units: powers and admittances in pu on base_mva, angles in radians,
// speeds in rad/s relative to synchronous. M_i = 2 H_i / w_s. The case file
// gives damping in pu power per pu speed; the reduced model divides it by
// w_s so that D_i w_i is pu power with w_i in rad/s.

#include <Eigen/Dense>
#include <json.hpp>

#include <complex>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "roa/dynsys.hpp"
#include "roa/error.hpp"

namespace roa::power {

using Complex = std::complex<double>;

enum class BusType { slack, pv, pq };

struct Bus {
  int id = 0;
  BusType type = BusType::pq;
  double v = 1.0;  // setpoint for slack/PV, initial guess for PQ
  double p_load = 0.0;
  double q_load = 0.0;
  double g_shunt = 0.0;
  double b_shunt = 0.0;
};

struct Branch {
  int from = 0;
  int to = 0;
  double r = 0.0;
  double x = 0.0;
  double b = 0.0;      // total line charging
  double ratio = 1.0;  // off-nominal tap on the from side
  bool in_service = true;
};

struct Machine {
  int bus = 0;
  double h = 0.0;         // inertia constant, s
  double d = 0.0;         // damping, pu power / pu speed
  double xd_prime = 0.0;  // transient reactance, pu
  double p_mech = 0.0;    // scheduled output (PV machines), pu
};

struct Contingency {
  int faulted_bus = 0;
  int from = 0;
  int to = 0;

  /// "bus:8,line:8-9"
  static Contingency parse(std::string_view spec);
  std::string spec() const;
  std::string line() const;
  bool operator==(const Contingency&) const = default;
};

struct PowerCase {
  std::string name;
  double base_mva = 100.0;
  double frequency_hz = 60.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Machine> machines;
  std::vector<Contingency> contingencies;  // optional study list

  std::size_t bus_index(int id) const;  // throws on unknown id
  std::optional<std::size_t> find_bus(int id) const;
  std::optional<std::size_t> find_branch(int a, int b) const;  // in-service, either orientation
  double omega_s() const;
};

class CaseError : public Error {
 public:
  using Error::Error;
};
class SchemaError : public CaseError {
 public:
  using CaseError::CaseError;
};
class MissingSlackError : public CaseError {
 public:
  using CaseError::CaseError;
};
class DisconnectedNetworkError : public CaseError {
 public:
  using CaseError::CaseError;
};

PowerCase load_case(const std::filesystem::path& path);
PowerCase parse_case(const nlohmann::json& j);
nlohmann::json case_to_json(const PowerCase& c);
/// Checks the invariants load_case guarantees.
void validate_case(const PowerCase& c);

/// Connectivity of the in-service branch graph, optionally without one branch.
bool is_connected(const PowerCase& c, std::optional<std::size_t> skip_branch = std::nullopt);

/// Bus admittance matrix over in-service branches plus bus shunts.
Eigen::MatrixXcd build_ybus(const PowerCase& c, std::optional<std::size_t> skip_branch = std::nullopt);

// ---------------------------------------------------------------------------

struct PowerFlowSolution {
  Eigen::VectorXcd voltage;    // per bus, case order
  Eigen::VectorXcd injection;  // net complex injection per bus
  int iterations = 0;
  double mismatch = 0.0;

  /// Generation at a bus: injection plus that bus's load.
  Complex generation(const PowerCase& c, std::size_t bus) const;
};

class PowerFlowDiverged : public Error {
 public:
  PowerFlowDiverged(const std::string& what, double mismatch) : Error(what), mismatch_(mismatch) {}
  double mismatch() const { return mismatch_; }

 private:
  double mismatch_;
};

/// Polar Newton-Raphson, flat start from setpoints; at most max_iterations.
PowerFlowSolution power_flow(const PowerCase& c, double tol = 1e-8, int max_iterations = 50);

/// Complex power mismatch S_calc - S_spec per bus (slack/PV Q entries are
/// not meaningful and left as computed).
Eigen::VectorXcd power_mismatch(const PowerCase& c, const Eigen::VectorXcd& voltage);

// ---------------------------------------------------------------------------

enum class NetworkState { pre_fault, fault_on, post_fault };

struct Topology {
  NetworkState state = NetworkState::pre_fault;
  std::optional<Contingency> contingency;

  static Topology pre_fault() { return {}; }
  static Topology fault_on(Contingency c) { return {NetworkState::fault_on, c}; }
  static Topology post_fault(Contingency c) { return {NetworkState::post_fault, c}; }
};

struct ReducedSystem {
  std::size_t n_mach = 0;
  Eigen::MatrixXcd y_reduced;  // n x n over internal nodes
  Eigen::VectorXcd e_internal;
  Eigen::VectorXd p_mech;
  Eigen::VectorXd m_inertia;
  Eigen::VectorXd d_damp;
  double omega_s = 0.0;
  std::vector<int> machine_buses;

  /// Angles of the internal voltages (the pre-fault operating point).
  Eigen::VectorXd internal_angles() const;
  /// Largest |Y_ij - Y_ji|.
  double symmetry_residual() const;
};

class ReductionFailed : public Error {
 public:
  using Error::Error;
};

/// Builds the internal-node admittance matrix for the requested topology.
/// Loads become constant admittances (P - jQ)/|V|^2 at the pre-fault
/// voltage; internal voltages E = V + j x'd I come from the pre-fault
/// solution in every topology. A fault grounds the faulted bus; post-fault
/// removes the tripped branch and drops any island left without machines.
ReducedSystem kron_reduce(const PowerCase& c, const PowerFlowSolution& pf, const Topology& topology);

/// Checks the contingency against the case (branch exists and is in
/// service, faulted bus is one of its ends).
void validate_contingency(const PowerCase& c, const Contingency& k);

// ---------------------------------------------------------------------------

struct SwingOptions {
  /// Zero every transfer and self conductance, leaving only B terms.
  bool lossless = false;
};

/// E_i E_j (B_ij sin(d_i - d_j) + G_ij cos(d_i - d_j)), the power machine i
/// sends towards machine j.
double interaction_power(const ReducedSystem& sys, std::size_t i, std::size_t j, double delta_i, double delta_j,
                         bool lossless);

/// Net constant injection P_i - E_i^2 G_ii.
double net_injection(const ReducedSystem& sys, std::size_t i, bool lossless);

/// Electrical output P_e,i = E_i^2 G_ii + sum_j interaction_power(i, j).
Eigen::VectorXd electrical_power(const ReducedSystem& sys, const Eigen::VectorXd& delta, bool lossless = false);

/// Full (delta_1..delta_n, w_1..w_n) model, decomposed into one linear part
/// (d' = w and the constant injection with damping) followed by one part
/// per machine pair i < j in lexicographic order.
DecomposedField swing_field(const ReducedSystem& sys, SwingOptions options = {});

/// Relative angle dynamics in y_k = delta_{k+1} - delta_1 (k = 1..n-1):
///   y_k' = a_{k+1}(delta) - a_1(delta),  a_i = (P_i - P_e,i) / M_i,
/// whose zeros are the synchronous operating points of the swing model.
/// Parts: the constant injections, then one part per machine pair.
DecomposedField reduced_angle_field(const ReducedSystem& sys, SwingOptions options = {});

}  // namespace roa::power
