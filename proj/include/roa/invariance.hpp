#pragma once

// Candidate regions of attraction assembled from per-sub-field invariant
// sets, and the two numerical certificates we run on them: outward flow on
// facets and long-horizon trajectory sampling.

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "roa/dynsys.hpp"
#include "roa/polytope.hpp"

namespace roa {

/// The set a sub-field's trajectories settle on: a point, an affine
/// equilibrium subspace {x : C x = d}, or a parametrized curve.
class LimitSet {
 public:
  enum class Kind { point, affine, curve };

  static LimitSet point(State p, std::string description = {});
  static LimitSet affine(Eigen::MatrixXd c, Eigen::VectorXd d, std::string description = {});
  static LimitSet curve(std::function<State(double)> param, double lo, double hi, std::string description = {});

  Kind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  const std::string& description() const { return description_; }

  /// Deterministic sample points on the set; affine sets are sampled along
  /// their directions within +-extent of the minimum-norm point.
  std::vector<State> sample(std::size_t count, double extent = 3.0) const;

  /// Euclidean distance (exact for points and affine sets, dense-grid
  /// approximation for curves).
  double distance(const State& x) const;

  nlohmann::json to_json() const;

 private:
  LimitSet() = default;

  Kind kind_ = Kind::point;
  std::size_t dim_ = 0;
  State point_;
  Eigen::MatrixXd c_;
  Eigen::VectorXd d_;
  std::function<State(double)> param_;
  double lo_ = 0.0;
  double hi_ = 0.0;
  std::string description_;
};

struct IndividualInvariantSet {
  HalfspacePolytope polytope;
  LimitSet limit;
};

struct CandidateRoa {
  HalfspacePolytope omega_e;
  State equilibrium;
  std::vector<IndividualInvariantSet> sources;

  std::size_t dim() const { return omega_e.dim(); }
};

class EmptyIntersection : public Error {
 public:
  using Error::Error;
};

class EquilibriumOutside : public Error {
 public:
  using Error::Error;
};

/// Intersects the individual sets; fails if the intersection is empty or
/// does not contain the equilibrium.
CandidateRoa build_candidate(std::vector<IndividualInvariantSet> sets, State equilibrium);

/// Max over sampled limit-set points of ||f^k(w)||_inf, one entry per part.
/// Sets pair with parts by index.
std::vector<double> limit_set_residuals(const DecomposedField& field, const std::vector<IndividualInvariantSet>& sets,
                                        std::size_t samples = 25);

// ---------------------------------------------------------------------------

struct FacetFlow {
  std::size_t facet = 0;
  std::size_t samples = 0;
  std::vector<double> part_max;  // per sub-field, max of a.f^k(x)/|a|
  double composite_max = 0.0;
};

struct BoundaryFlowReport {
  double tol = 1e-7;
  std::vector<std::string> part_labels;
  std::vector<FacetFlow> facets;

  /// Every sampled facet/sub-field maximum is <= tol.
  bool passed() const;
  /// composite max <= sum of part maxima on every facet.
  bool composite_bounded() const;
  double worst_part_max() const;

  nlohmann::json to_json() const;
};

struct BoundaryFlowOptions {
  double tol = 1e-7;
  double clip = 50.0;
  std::uint64_t seed = 0;
};

/// Samples each facet {a_i x = b_i} of Omega_e (clipped to the sampling
/// box) and records the outward normal component of every sub-field.
BoundaryFlowReport check_boundary_flow(const DecomposedField& field, const CandidateRoa& roa,
                                       std::size_t samples_per_facet, const BoundaryFlowOptions& options = {});

// ---------------------------------------------------------------------------

struct SampleOutcome {
  std::size_t index = 0;
  State initial;
  bool exited = false;
  double exit_time = 0.0;
  State exit_state;
  State terminal;
  double terminal_distance = 0.0;
};

struct InvarianceReport {
  double t_end = 0.0;
  double convergence_tol = 1e-3;
  std::vector<SampleOutcome> samples;

  std::size_t exit_count() const;
  double max_terminal_distance() const;
  bool all_converged() const { return max_terminal_distance() <= convergence_tol; }
  bool passed() const { return exit_count() == 0 && all_converged(); }

  nlohmann::json to_json() const;
};

class UnboundedSet : public Error {
 public:
  using Error::Error;
};

struct TrajectoryCheckOptions {
  std::uint64_t seed = 0;
  double exit_tol = 1e-7;
  double convergence_tol = 1e-3;
  double clip = 50.0;
  std::size_t max_draws = 1'000'000;
  IntegratorConfig integrator = IntegratorConfig::adaptive(1e-9, 1e-12, 1e-2);
  /// Distance target; the equilibrium when unset.
  std::optional<LimitSet> target;
  /// Worker threads; 0 = hardware concurrency.
  unsigned jobs = 0;
};

/// Draws initial points uniformly in Omega_e (rejection sampling in its
/// clipped bounding box), integrates each to t_end, and records exits and
/// terminal distances. Ordering is by sample index regardless of jobs.
InvarianceReport check_trajectory_invariance(const VectorField& field, const CandidateRoa& roa, std::size_t n_samples,
                                             double t_end, const TrajectoryCheckOptions& options = {});

/// Same, for an explicit list of initial points (no sampling).
InvarianceReport check_trajectory_invariance(const VectorField& field, const CandidateRoa& roa,
                                             const std::vector<State>& initial_points, double t_end,
                                             const TrajectoryCheckOptions& options = {});

/// Seeded uniform points inside the polytope.
std::vector<State> sample_polytope(const HalfspacePolytope& p, std::size_t count, std::uint64_t seed,
                                   double clip = 50.0, std::size_t max_draws = 1'000'000);

nlohmann::json state_to_json(const State& x);

}  // namespace roa
