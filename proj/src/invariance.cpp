#include "roa/invariance.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "roa/log.hpp"
#include "roa/parallel.hpp"

namespace roa {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd null_space(const Eigen::MatrixXd& c) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(c);
  return lu.kernel();
}

}  // namespace

nlohmann::json state_to_json(const State& x) { return std::vector<double>(x.data(), x.data() + x.size()); }

// ---------------------------------------------------------------------------
// LimitSet

LimitSet LimitSet::point(State p, std::string description) {
  LimitSet s;
  s.kind_ = Kind::point;
  s.dim_ = static_cast<std::size_t>(p.size());
  s.point_ = std::move(p);
  s.description_ = description.empty() ? "equilibrium point" : std::move(description);
  return s;
}

LimitSet LimitSet::affine(Eigen::MatrixXd c, Eigen::VectorXd d, std::string description) {
  if (c.rows() != d.size() || c.rows() == 0) throw PreconditionError("affine limit set needs C (k x n) and d (k)");
  LimitSet s;
  s.kind_ = Kind::affine;
  s.dim_ = static_cast<std::size_t>(c.cols());
  s.point_ = c.completeOrthogonalDecomposition().solve(d);
  s.c_ = std::move(c);
  s.d_ = std::move(d);
  s.description_ = description.empty() ? "affine equilibrium subspace" : std::move(description);
  return s;
}

LimitSet LimitSet::curve(std::function<State(double)> param, double lo, double hi, std::string description) {
  if (!param || !(hi > lo)) throw PreconditionError("curve limit set needs a parametrization over lo < hi");
  LimitSet s;
  s.kind_ = Kind::curve;
  s.dim_ = static_cast<std::size_t>(param(lo).size());
  s.param_ = std::move(param);
  s.lo_ = lo;
  s.hi_ = hi;
  s.description_ = description.empty() ? "equilibrium curve" : std::move(description);
  return s;
}

std::vector<State> LimitSet::sample(std::size_t count, double extent) const {
  std::vector<State> out;
  if (count == 0) return out;
  const auto at = [count](std::size_t k) {
    return count == 1 ? 0.5 : static_cast<double>(k) / static_cast<double>(count - 1);
  };
  switch (kind_) {
    case Kind::point:
      out.push_back(point_);
      break;
    case Kind::affine: {
      const Eigen::MatrixXd basis = null_space(c_);
      if (basis.cols() == 0 || basis.isZero(0.0)) {
        out.push_back(point_);
        break;
      }
      for (std::size_t k = 0; k < count; ++k) {
        const double s = -extent + 2.0 * extent * at(k);
        const Eigen::Index dir = static_cast<Eigen::Index>(k) % basis.cols();
        out.push_back(point_ + s * basis.col(dir).normalized());
      }
      break;
    }
    case Kind::curve:
      for (std::size_t k = 0; k < count; ++k) out.push_back(param_(lo_ + (hi_ - lo_) * at(k)));
      break;
  }
  return out;
}

double LimitSet::distance(const State& x) const {
  if (static_cast<std::size_t>(x.size()) != dim_) throw PreconditionError("limit set distance: wrong dimension");
  switch (kind_) {
    case Kind::point:
      return (x - point_).norm();
    case Kind::affine: {
      const Eigen::VectorXd residual = c_ * x - d_;
      return c_.completeOrthogonalDecomposition().solve(residual).norm();
    }
    case Kind::curve: {
      constexpr int kGrid = 2001;
      double best = kInf;
      double best_s = lo_;
      for (int k = 0; k < kGrid; ++k) {
        const double s = lo_ + (hi_ - lo_) * k / (kGrid - 1);
        const double dist = (x - param_(s)).norm();
        if (dist < best) {
          best = dist;
          best_s = s;
        }
      }
      // Golden-section polish inside the bracketing grid cell.
      const double cell = (hi_ - lo_) / (kGrid - 1);
      double a = std::max(lo_, best_s - cell);
      double b = std::min(hi_, best_s + cell);
      const double g = (std::sqrt(5.0) - 1.0) / 2.0;
      for (int it = 0; it < 60; ++it) {
        const double m1 = b - g * (b - a);
        const double m2 = a + g * (b - a);
        if ((x - param_(m1)).norm() < (x - param_(m2)).norm()) {
          b = m2;
        } else {
          a = m1;
        }
      }
      return std::min(best, (x - param_(0.5 * (a + b))).norm());
    }
  }
  return kInf;
}

nlohmann::json LimitSet::to_json() const {
  nlohmann::json j{{"description", description_}};
  switch (kind_) {
    case Kind::point:
      j["kind"] = "point";
      j["point"] = state_to_json(point_);
      break;
    case Kind::affine: {
      j["kind"] = "affine";
      nlohmann::json rows = nlohmann::json::array();
      for (Eigen::Index i = 0; i < c_.rows(); ++i) {
        rows.push_back(std::vector<double>(c_.cols()));
        for (Eigen::Index k = 0; k < c_.cols(); ++k) rows.back()[static_cast<std::size_t>(k)] = c_(i, k);
      }
      j["C"] = std::move(rows);
      j["d"] = state_to_json(d_);
      break;
    }
    case Kind::curve:
      j["kind"] = "curve";
      j["parameter_range"] = {lo_, hi_};
      break;
  }
  return j;
}

// ---------------------------------------------------------------------------

CandidateRoa build_candidate(std::vector<IndividualInvariantSet> sets, State equilibrium) {
  if (sets.empty()) throw PreconditionError("build_candidate needs at least one invariant set");
  std::vector<HalfspacePolytope> polytopes;
  polytopes.reserve(sets.size());
  for (const auto& s : sets) polytopes.push_back(s.polytope);
  HalfspacePolytope omega_e = intersect(polytopes);
  if (static_cast<std::size_t>(equilibrium.size()) != omega_e.dim()) {
    throw PreconditionError("equilibrium dimension does not match the invariant sets");
  }
  if (omega_e.is_empty()) throw EmptyIntersection("the individual invariant sets do not intersect");
  if (!omega_e.contains(equilibrium)) {
    throw EquilibriumOutside(fmt::format("equilibrium violates the intersection by {:.3e}",
                                         omega_e.max_violation(equilibrium)));
  }
  return CandidateRoa{std::move(omega_e), std::move(equilibrium), std::move(sets)};
}

std::vector<double> limit_set_residuals(const DecomposedField& field, const std::vector<IndividualInvariantSet>& sets,
                                        std::size_t samples) {
  if (sets.size() != field.size()) throw PreconditionError("one invariant set per sub-field is required");
  std::vector<double> out;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    double worst = 0.0;
    for (const State& w : sets[k].limit.sample(samples)) {
      worst = std::max(worst, field.part(k)(w).lpNorm<Eigen::Infinity>());
    }
    out.push_back(worst);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Boundary flow

bool BoundaryFlowReport::passed() const { return worst_part_max() <= tol; }

double BoundaryFlowReport::worst_part_max() const {
  double worst = -kInf;
  for (const auto& f : facets) {
    for (double v : f.part_max) worst = std::max(worst, v);
  }
  return worst;
}

bool BoundaryFlowReport::composite_bounded() const {
  for (const auto& f : facets) {
    if (f.samples == 0) continue;
    double sum = 0.0;
    for (double v : f.part_max) sum += v;
    if (f.composite_max > sum + 1e-12 * (1.0 + std::abs(sum))) return false;
  }
  return true;
}

nlohmann::json BoundaryFlowReport::to_json() const {
  nlohmann::json facets_json = nlohmann::json::array();
  for (const auto& f : facets) {
    facets_json.push_back({{"facet", f.facet},
                           {"samples", f.samples},
                           {"part_max", f.part_max},
                           {"composite_max", f.samples == 0 ? nlohmann::json() : nlohmann::json(f.composite_max)}});
  }
  return {{"tol", tol},
          {"parts", part_labels},
          {"facets", std::move(facets_json)},
          {"passed", passed()},
          {"composite_bounded", composite_bounded()}};
}

namespace {

// Points on {a_i x = b_i} inside the polytope and box.
std::vector<State> facet_samples(const HalfspacePolytope& p, const Box& box, Eigen::Index row, std::size_t count,
                                 std::mt19937_64& rng) {
  const Eigen::VectorXd a = p.a().row(row).transpose();
  const double norm2 = a.squaredNorm();
  const auto n = a.size();
  std::vector<State> out;
  if (norm2 == 0.0 || count == 0) return out;
  const HalfspacePolytope clipped = intersect(std::vector<HalfspacePolytope>{p, HalfspacePolytope::box(box)});
  const auto inside = [&](const State& x) { return clipped.contains(x, 1e-9); };

  if (n == 1) {
    State x(1);
    x[0] = p.b()[row] / a[0];
    if (inside(x)) out.push_back(x);
    return out;
  }

  // Project the box centre onto the hyperplane as the origin of the facet
  // parametrization.
  const State centre = 0.5 * (box.lo + box.hi);
  const State origin = centre - a * ((a.dot(centre) - p.b()[row]) / norm2);

  if (n == 2) {
    const State dir = Eigen::Vector2d(-a[1], a[0]) / std::sqrt(norm2);
    double s_lo = -kInf;
    double s_hi = kInf;
    const auto& ca = clipped.a();
    const auto& cb = clipped.b();
    for (Eigen::Index k = 0; k < ca.rows(); ++k) {
      const double slope = ca.row(k).dot(dir);
      const double slack = cb[k] - ca.row(k).dot(origin);
      if (std::abs(slope) < 1e-14) {
        if (slack < -1e-9) return out;
        continue;
      }
      if (slope > 0) {
        s_hi = std::min(s_hi, slack / slope);
      } else {
        s_lo = std::max(s_lo, slack / slope);
      }
    }
    if (!(s_lo <= s_hi + 1e-12)) return out;
    for (std::size_t k = 0; k < count; ++k) {
      const double w = count == 1 ? 0.5 : static_cast<double>(k) / static_cast<double>(count - 1);
      State x = origin + (s_lo + (s_hi - s_lo) * w) * dir;
      if (inside(x)) out.push_back(std::move(x));
    }
    return out;
  }

  Eigen::MatrixXd basis = null_space(a.transpose());
  for (Eigen::Index c = 0; c < basis.cols(); ++c) basis.col(c).normalize();
  const double radius = 0.5 * (box.hi - box.lo).norm();
  std::uniform_real_distribution<double> coord(-radius, radius);
  const std::size_t max_draws = 2000 * count;
  for (std::size_t draw = 0; draw < max_draws && out.size() < count; ++draw) {
    Eigen::VectorXd u(basis.cols());
    for (Eigen::Index c = 0; c < u.size(); ++c) u[c] = coord(rng);
    State x = origin + basis * u;
    if (inside(x)) out.push_back(std::move(x));
  }
  return out;
}

}  // namespace

BoundaryFlowReport check_boundary_flow(const DecomposedField& field, const CandidateRoa& roa,
                                       std::size_t samples_per_facet, const BoundaryFlowOptions& options) {
  if (field.dim() != roa.dim()) throw PreconditionError("field and candidate ROA dimensions differ");
  BoundaryFlowReport report;
  report.tol = options.tol;
  for (std::size_t k = 0; k < field.size(); ++k) report.part_labels.push_back(field.label(k));

  const HalfspacePolytope& omega = roa.omega_e;
  const Box box = omega.bounding_box(options.clip);
  std::mt19937_64 rng(options.seed);

  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(omega.rows()); ++i) {
    FacetFlow flow;
    flow.facet = static_cast<std::size_t>(i);
    const Eigen::VectorXd a = omega.a().row(i).transpose();
    const double norm = a.norm();
    const std::vector<State> points = facet_samples(omega, box, i, samples_per_facet, rng);
    flow.samples = points.size();
    if (!points.empty()) {
      flow.part_max.assign(field.size(), -kInf);
      flow.composite_max = -kInf;
      for (const State& x : points) {
        for (std::size_t k = 0; k < field.size(); ++k) {
          flow.part_max[k] = std::max(flow.part_max[k], a.dot(field.part(k)(x)) / norm);
        }
        flow.composite_max = std::max(flow.composite_max, a.dot(field(x)) / norm);
      }
    }
    report.facets.push_back(std::move(flow));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Trajectory sampling

std::size_t InvarianceReport::exit_count() const {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [](const SampleOutcome& s) { return s.exited; }));
}

double InvarianceReport::max_terminal_distance() const {
  double worst = 0.0;
  for (const auto& s : samples) worst = std::max(worst, s.terminal_distance);
  return worst;
}

nlohmann::json InvarianceReport::to_json() const {
  nlohmann::json exits = nlohmann::json::array();
  for (const auto& s : samples) {
    if (!s.exited) continue;
    exits.push_back({{"sample", s.index},
                     {"initial", state_to_json(s.initial)},
                     {"exit_time", s.exit_time},
                     {"exit_state", state_to_json(s.exit_state)}});
  }
  const double worst = max_terminal_distance();
  return {{"t_end", t_end},
          {"samples", samples.size()},
          {"exits", exit_count()},
          {"exit_records", std::move(exits)},
          {"max_terminal_distance", std::isfinite(worst) ? nlohmann::json(worst) : nlohmann::json()},
          {"convergence_tol", convergence_tol},
          {"passed", passed()}};
}

std::vector<State> sample_polytope(const HalfspacePolytope& p, std::size_t count, std::uint64_t seed, double clip,
                                   std::size_t max_draws) {
  const Box box = p.bounding_box(clip);
  std::mt19937_64 rng(seed);
  std::vector<std::uniform_real_distribution<double>> coords;
  for (std::size_t j = 0; j < box.dim(); ++j) {
    const auto idx = static_cast<Eigen::Index>(j);
    coords.emplace_back(box.lo[idx], std::max(box.hi[idx], std::nextafter(box.lo[idx], kInf)));
  }
  std::vector<State> out;
  out.reserve(count);
  State x(static_cast<Eigen::Index>(box.dim()));
  for (std::size_t s = 0; s < count; ++s) {
    std::size_t draws = 0;
    for (;;) {
      if (++draws > max_draws) {
        throw UnboundedSet(fmt::format(
            "rejection sampling found no interior point in {} draws; the set is unbounded or thin, "
            "give explicit bounds",
            max_draws));
      }
      for (std::size_t j = 0; j < box.dim(); ++j) x[static_cast<Eigen::Index>(j)] = coords[j](rng);
      if (p.contains(x, 0.0)) break;
    }
    out.push_back(x);
  }
  return out;
}

InvarianceReport check_trajectory_invariance(const VectorField& field, const CandidateRoa& roa, std::size_t n_samples,
                                             double t_end, const TrajectoryCheckOptions& options) {
  if (n_samples == 0) throw PreconditionError("sample count must be positive");
  return check_trajectory_invariance(field, roa,
                                     sample_polytope(roa.omega_e, n_samples, options.seed, options.clip,
                                                     options.max_draws),
                                     t_end, options);
}

InvarianceReport check_trajectory_invariance(const VectorField& field, const CandidateRoa& roa,
                                             const std::vector<State>& initial_points, double t_end,
                                             const TrajectoryCheckOptions& options) {
  if (!(t_end > 0.0)) throw PreconditionError("horizon must be positive");
  if (initial_points.empty()) throw PreconditionError("no initial points");
  if (field.dim() != roa.dim()) throw PreconditionError("field and candidate ROA dimensions differ");

  InvarianceReport report;
  report.t_end = t_end;
  report.convergence_tol = options.convergence_tol;
  report.samples.resize(initial_points.size());

  const auto distance = [&](const State& x) {
    return options.target ? options.target->distance(x) : (x - roa.equilibrium).norm();
  };

  parallel_for(initial_points.size(), options.jobs, [&](std::size_t i) {
    SampleOutcome& out = report.samples[i];
    out.index = i;
    out.initial = initial_points[i];
    const auto observer = [&](double t, const State& x) {
      if (!out.exited && !roa.omega_e.contains(x, options.exit_tol)) {
        out.exited = true;
        out.exit_time = t;
        out.exit_state = x;
      }
      return true;
    };
    try {
      const Trajectory traj = integrate(field, out.initial, t_end, options.integrator, observer);
      out.terminal = traj.final_state();
      out.terminal_distance = distance(out.terminal);
    } catch (const IntegrationDiverged& e) {
      log().info("sample {} diverged: {}", i, e.what());
      if (!out.exited) {
        out.exited = true;
        out.exit_time = e.time();
        out.exit_state = e.last_state();
      }
      out.terminal = e.last_state();
      out.terminal_distance = kInf;
    }
  });
  return report;
}

}  // namespace roa
