#include "roa/example_systems.hpp"

#include <fmt/format.h>

#include <array>
#include <cmath>
#include <numbers>

namespace roa::examples {

namespace {

using std::numbers::pi;

State vec2(double a, double b) { return Eigen::Vector2d(a, b); }

HalfspacePolytope rows2(std::initializer_list<std::array<double, 3>> rows) {
  Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), 2);
  Eigen::VectorXd b(static_cast<Eigen::Index>(rows.size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    a(i, 0) = r[0];
    a(i, 1) = r[1];
    b[i] = r[2];
    ++i;
  }
  return HalfspacePolytope(std::move(a), std::move(b));
}

LimitSet line(double c1, double c2, double d, std::string description) {
  Eigen::MatrixXd c(1, 2);
  c << c1, c2;
  return LimitSet::affine(std::move(c), Eigen::VectorXd::Constant(1, d), std::move(description));
}

ExampleSystem example1(const Params& p) {
  const double a = p.at("a");
  const double b = p.at("b");
  DecomposedField field(
      {VectorField(2, [b](const State& x) { return vec2(-b * std::sin(x[0]), 0.0); }),
       VectorField(2, [b](const State& x) { return vec2(0.0, -b * std::sin(x[1])); }),
       VectorField(2, [a](const State& x) { return vec2(-a * x[0], -a * x[1]); })},
      {"-b sin x1", "-b sin x2", "-a x"});
  std::vector<IndividualInvariantSet> sets{
      {rows2({{1, 0, pi}, {-1, 0, pi}}), line(1, 0, 0, "x1 = 0 (stable equilibrium subspace)")},
      {rows2({{0, 1, pi}, {0, -1, pi}}), line(0, 1, 0, "x2 = 0 (stable equilibrium subspace)")},
      {HalfspacePolytope::whole_space(2), LimitSet::point(vec2(0, 0), "origin (globally stable)")},
  };
  CandidateRoa roa = build_candidate(sets, vec2(0, 0));
  return {"example1", p, std::move(field), std::move(sets), std::move(roa)};
}

ExampleSystem example2(const Params& p) {
  const double a1 = p.at("a1");
  const double a2 = p.at("a2");
  const double b = p.at("b");
  DecomposedField field(
      {VectorField(2, [a1](const State& x) { return vec2(-a1 * std::sin(x[0]), 0.0); }),
       VectorField(2, [a2](const State& x) { return vec2(0.0, -a2 * std::sin(x[1])); }),
       VectorField(2, [b](const State& x) { return vec2(-b * std::sin(x[0] - x[1]), -b * std::sin(x[1] - x[0])); })},
      {"-a1 sin x1", "-a2 sin x2", "-b sin(x1 - x2)"});
  std::vector<IndividualInvariantSet> sets{
      {rows2({{1, 0, pi}, {-1, 0, pi}}), line(1, 0, 0, "x1 = 0 (stable equilibrium subspace)")},
      {rows2({{0, 1, pi}, {0, -1, pi}}), line(0, 1, 0, "x2 = 0 (stable equilibrium subspace)")},
      {rows2({{1, -1, pi}, {-1, 1, pi}}), line(1, -1, 0, "x1 = x2 (stable equilibrium subspace)")},
  };
  CandidateRoa roa = build_candidate(sets, vec2(0, 0));
  return {"example2", p, std::move(field), std::move(sets), std::move(roa)};
}

ExampleSystem example3(const Params& p) {
  const double a = p.at("a");
  const double b = p.at("b");
  const double c = p.at("c");
  DecomposedField field({VectorField(2, [a](const State& x) { return vec2(-a * x[1] * std::sin(x[0]), 0.0); }),
                         VectorField(2, [b, c](const State& x) { return vec2(0.0, -b * x[1] + c * std::cos(x[0])); })},
                        {"-a x2 sin x1", "-b x2 + c cos x1"});
  std::vector<IndividualInvariantSet> sets{
      {rows2({{1, 0, pi}, {-1, 0, pi}, {0, -1, 0}}), line(1, 0, 0, "x1 = 0, x2 >= 0 (stable equilibria)")},
      {rows2({{1, 0, pi / 2}, {-1, 0, pi / 2}}),
       LimitSet::curve([b, c](double s) { return vec2(s, (c / b) * std::cos(s)); }, -pi / 2, pi / 2,
                       "x2 = (c/b) cos x1 (stable equilibria)")},
  };
  CandidateRoa roa = build_candidate(sets, vec2(0, c / b));
  return {"example3", p, std::move(field), std::move(sets), std::move(roa)};
}

}  // namespace

std::vector<std::string> example_names() { return {"example1", "example2", "example3"}; }

Params default_params(std::string_view name) {
  if (name == "example1") return {{"a", 0.1}, {"b", 1.0}};
  if (name == "example2") return {{"a1", 1.0}, {"a2", 0.5}, {"b", 0.5}};
  if (name == "example3") return {{"a", 2.0}, {"b", 2.7}, {"c", 1.7}};
  throw UnknownExample(fmt::format("unknown example '{}' (expected example1, example2 or example3)", name));
}

ExampleSystem make_example(std::string_view name, const Params& overrides) {
  Params params = default_params(name);
  for (const auto& [key, value] : overrides) {
    if (!params.contains(key)) {
      throw PreconditionError(fmt::format("{} has no parameter '{}'", name, key));
    }
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw PreconditionError(fmt::format("parameter {} must be positive, got {}", key, value));
    }
    params[key] = value;
  }
  if (name == "example1") return example1(params);
  if (name == "example2") return example2(params);
  return example3(params);
}

std::vector<GridSample> vector_field_grid(const ExampleSystem& sys, const Box& box, std::size_t resolution) {
  return vector_field_grid(sys.field.composite(), box, resolution);
}

std::vector<GridSample> vector_field_grid(const VectorField& field, const Box& box, std::size_t resolution) {
  const std::size_t n = field.dim();
  if (box.dim() != n) throw PreconditionError("grid box dimension differs from the system");
  if (resolution < 2) throw PreconditionError("grid resolution must be at least 2");
  for (std::size_t j = 0; j < n; ++j) {
    const auto idx = static_cast<Eigen::Index>(j);
    if (!(box.hi[idx] > box.lo[idx])) {
      throw PreconditionError(fmt::format("degenerate grid box along x{}", j + 1));
    }
  }
  std::size_t total = 1;
  for (std::size_t j = 0; j < n; ++j) total *= resolution;

  std::vector<GridSample> grid;
  grid.reserve(total);
  std::vector<std::size_t> counter(n, 0);
  for (std::size_t k = 0; k < total; ++k) {
    State x(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
      const auto idx = static_cast<Eigen::Index>(j);
      const double w = static_cast<double>(counter[j]) / static_cast<double>(resolution - 1);
      x[idx] = counter[j] + 1 == resolution ? box.hi[idx] : box.lo[idx] + (box.hi[idx] - box.lo[idx]) * w;
    }
    grid.push_back({x, field(x)});
    for (std::size_t j = n; j-- > 0;) {
      if (++counter[j] < resolution) break;
      counter[j] = 0;
    }
  }
  return grid;
}

void write_grid_csv(std::ostream& os, const std::vector<GridSample>& grid) {
  if (grid.empty()) return;
  const auto n = grid.front().x.size();
  for (Eigen::Index j = 0; j < n; ++j) os << (j ? "," : "") << "x" << j + 1;
  for (Eigen::Index j = 0; j < n; ++j) os << ",f" << j + 1;
  os << '\n';
  for (const auto& g : grid) {
    for (Eigen::Index j = 0; j < n; ++j) os << (j ? "," : "") << fmt::format("{:.17g}", g.x[j]);
    for (Eigen::Index j = 0; j < n; ++j) os << fmt::format(",{:.17g}", g.f[j]);
    os << '\n';
  }
}

}  // namespace roa::examples
