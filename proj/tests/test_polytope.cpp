#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "roa/polytope.hpp"
#include "roa/simplex.hpp"

using namespace roa;

namespace {

Eigen::MatrixXd mat(Eigen::Index r, Eigen::Index c, std::initializer_list<double> v) {
  Eigen::MatrixXd m(r, c);
  Eigen::Index k = 0;
  for (double d : v) m(k / c, k % c) = d, ++k;
  return m;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x(i++) = d;
  return x;
}

}  // namespace

TEST_CASE("simplex solves a textbook LP") {
  // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
  const auto a = mat(5, 2, {1, 0, 0, 2, 3, 2, -1, 0, 0, -1});
  const auto b = vec({4, 12, 18, 0, 0});
  const lp::Result r = lp::minimize(vec({-3, -5}), a, b);
  REQUIRE(r.status == lp::Status::optimal);
  CHECK(r.objective == doctest::Approx(-36.0));
  CHECK(r.x(0) == doctest::Approx(2.0));
  CHECK(r.x(1) == doctest::Approx(6.0));
}

TEST_CASE("simplex reports unbounded and infeasible problems") {
  const auto a = mat(1, 2, {1, 1});
  CHECK(lp::minimize(vec({-1, 0}), a, vec({1})).status == lp::Status::unbounded);
  const auto bad = mat(2, 1, {1, -1});
  CHECK(lp::find_feasible(bad, vec({-1, -1})).status == lp::Status::infeasible);
}

TEST_CASE("Bland's rule terminates on a degenerate cycling example") {
  // Beale's example, which cycles under the largest-coefficient rule.
  const auto a = mat(7, 4, {0.25, -60, -0.04, 9, 0.5, -90, -0.02, 3, 0, 0, 1, 0,  //
                            -1, 0, 0, 0, 0, -1, 0, 0, 0, 0, -1, 0, 0, 0, 0, -1});
  const auto b = vec({0, 0, 1, 0, 0, 0, 0});
  const lp::Result r = lp::minimize(vec({-0.75, 150, -0.02, 6}), a, b);
  REQUIRE(r.status == lp::Status::optimal);
  CHECK(r.objective == doctest::Approx(-0.05));
}

TEST_CASE("constructor rejects malformed input") {
  CHECK_THROWS_AS(HalfspacePolytope(mat(1, 2, {0, 0}), vec({-1})), PreconditionError);
  CHECK_THROWS_AS(HalfspacePolytope(mat(1, 2, {1, 0}), vec({1, 2})), PreconditionError);
  CHECK_THROWS_AS(HalfspacePolytope(Eigen::MatrixXd(0, 0), Eigen::VectorXd(0)), PreconditionError);
  CHECK_NOTHROW(HalfspacePolytope(mat(1, 2, {0, 0}), vec({0})));
}

TEST_CASE("membership equals the row-wise conjunction") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + rng() % 6);
    const auto m = static_cast<Eigen::Index>(1 + rng() % 12);
    Eigen::MatrixXd a(m, n);
    Eigen::VectorXd b(m);
    for (auto& v : a.reshaped()) v = g(rng);
    for (auto& v : b) v = std::abs(g(rng));
    const HalfspacePolytope p(a, b);
    State x(n);
    for (auto& v : x) v = g(rng);
    if (trial % 4 == 0) {
      // Put the point on a facet.
      const Eigen::Index i = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(m));
      x += a.row(i).transpose() * ((b(i) - a.row(i).dot(x)) / a.row(i).squaredNorm());
    }
    REQUIRE(p.contains(x) == oracle::conjunction(a, b, x, kMembershipTol));
    REQUIRE(p.contains(x, 0.0) == oracle::conjunction(a, b, x, 0.0));
  }
}

TEST_CASE("is_empty agrees with rejection sampling on constructed polytopes") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t dim = 1 + static_cast<std::size_t>(trial % 6);
    const auto rp = oracle::random_small_polytope(rng, dim, trial % 2 == 1);
    const HalfspacePolytope p(rp.a, rp.b);
    const auto witness = oracle::rejection_witness(rp.a, rp.b, static_cast<std::uint64_t>(trial), 400000);
    CHECK(p.is_empty() == !witness.has_value());
    CHECK(p.is_empty() == rp.empty_by_construction);
    if (auto fp = p.feasible_point()) CHECK(p.contains(*fp, 1e-8));
  }
}

TEST_CASE("whole space, cube and box") {
  const auto w = HalfspacePolytope::whole_space(3);
  CHECK(w.rows() == 0);
  CHECK(w.contains(vec({1e9, -1e9, 0})));
  CHECK_FALSE(w.is_empty());
  const auto c = HalfspacePolytope::cube(2, M_PI);
  CHECK(c.rows() == 4);
  CHECK(c.contains(vec({M_PI, -M_PI})));
  CHECK_FALSE(c.contains(vec({M_PI + 1e-6, 0})));
  const auto b = HalfspacePolytope::box({vec({-1, 0}), vec({1, 2})});
  CHECK(b.contains(vec({0.5, 1.5})));
  CHECK_FALSE(b.contains(vec({0.5, -0.5})));
}

TEST_CASE("bounding box by LP, clipped when unbounded") {
  // x >= 0, y >= 0, x + y <= 2
  const HalfspacePolytope tri(mat(3, 2, {-1, 0, 0, -1, 1, 1}), vec({0, 0, 2}));
  const Box bb = tri.bounding_box();
  CHECK(bb.lo(0) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(bb.hi(0) == doctest::Approx(2.0));
  CHECK(bb.hi(1) == doctest::Approx(2.0));
  const HalfspacePolytope ray(mat(1, 2, {0, -1}), vec({0}));
  const Box rb = ray.bounding_box(7.0);
  CHECK(rb.lo(0) == -7.0);
  CHECK(rb.hi(1) == 7.0);
  CHECK(rb.lo(1) == doctest::Approx(0.0).epsilon(1e-9));
  const HalfspacePolytope empty(mat(2, 1, {1, -1}), vec({0, -1}));
  CHECK_THROWS_AS(empty.bounding_box(), PreconditionError);
}

TEST_CASE("intersection concatenates rows and checks dimensions") {
  const std::vector<HalfspacePolytope> ps{HalfspacePolytope::cube(2, 1.0), HalfspacePolytope(mat(1, 2, {1, 1}), vec({0}))};
  const auto p = intersect(ps);
  CHECK(p.rows() == 5);
  CHECK(p.contains(vec({-0.5, 0.4})));
  CHECK_FALSE(p.contains(vec({0.5, 0.4})));
  const std::vector<HalfspacePolytope> mixed{HalfspacePolytope::cube(2, 1.0), HalfspacePolytope::cube(3, 1.0)};
  CHECK_THROWS_AS(intersect(mixed), PreconditionError);
}

TEST_CASE("JSON round trip") {
  const HalfspacePolytope p(mat(2, 2, {1, 0.1, -0.3, 1}), vec({1.0 / 3.0, 2.5}));
  const nlohmann::json j = p;
  CHECK(polytope_from_json(nlohmann::json::parse(j.dump())) == p);
  const auto w = HalfspacePolytope::whole_space(4);
  CHECK(polytope_from_json(nlohmann::json(w)) == w);
  CHECK(polytope_from_json(nlohmann::json::parse(R"({"A": [[1, 2]], "b": [3]})")).dim() == 2);
  CHECK_THROWS(polytope_from_json(nlohmann::json::parse(R"({"A": [], "b": []})")));
  CHECK_THROWS(polytope_from_json(nlohmann::json::parse(R"({"A": [[1]], "b": [1, 2]})")));
}
