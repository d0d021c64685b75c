#include <doctest.h>

#include <cstdlib>
#include <cstring>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "roa/kernels.hpp"

using namespace roa::simd;

namespace {

struct Problem {
  std::vector<double> a, b, x;
  std::size_t rows, cols;
  RowView view() const { return {a, b, rows, cols}; }
};

Problem random_problem(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  Problem p{{}, {}, {}, rows, cols};
  p.a.resize(rows * cols);
  p.b.resize(rows);
  p.x.resize(cols);
  for (auto& v : p.a) v = u(rng);
  for (auto& v : p.b) v = u(rng);
  for (auto& v : p.x) v = u(rng);
  return p;
}

// Plain row loop, independent of the kernels.
std::vector<double> reference(const Problem& p) {
  std::vector<double> out(p.rows);
  for (std::size_t i = 0; i < p.rows; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < p.cols; ++j) acc = acc + p.a[j * p.rows + i] * p.x[j];
    out[i] = acc - p.b[i];
  }
  return out;
}

bool same_bits(const std::vector<double>& u, const std::vector<double>& v) {
  return u.size() == v.size() && std::memcmp(u.data(), v.data(), u.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("scalar kernel matches the reference loop bit for bit") {
  std::mt19937_64 rng(1);
  for (std::size_t rows = 1; rows <= 19; ++rows) {
    for (std::size_t cols = 1; cols <= 7; ++cols) {
      const Problem p = random_problem(rng, rows, cols);
      std::vector<double> out(rows);
      scalar::row_residuals(p.view(), p.x, out);
      CHECK(same_bits(out, reference(p)));
    }
  }
}

TEST_CASE("max_row_residual of an empty row set is -inf") {
  const Problem p{{}, {}, {1.0, 2.0}, 0, 2};
  CHECK(scalar::max_row_residual(p.view(), p.x) == -std::numeric_limits<double>::infinity());
  CHECK(max_row_residual(p.view(), p.x) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("dispatch honours ROA_SIMD=scalar") {
  const char* forced = std::getenv("ROA_SIMD");
  if (forced != nullptr && std::string(forced) == "scalar") {
    CHECK(active_isa() == Isa::scalar);
  } else {
    CHECK(isa_available(active_isa()));
  }
  CHECK(isa_available(Isa::scalar));
}

#if defined(ROA_HAVE_AVX2)
TEST_CASE("avx2 and scalar kernels agree bit for bit") {
  if (!isa_available(Isa::avx2)) {
    MESSAGE("CPU lacks AVX2; equivalence not exercised");
    return;
  }
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> rows_d(1, 67), cols_d(1, 12);
  for (int trial = 0; trial < 2000; ++trial) {
    const Problem p = random_problem(rng, rows_d(rng), cols_d(rng));
    std::vector<double> s(p.rows), v(p.rows);
    scalar::row_residuals(p.view(), p.x, s);
    avx2::row_residuals(p.view(), p.x, v);
    REQUIRE(same_bits(s, v));
    const double ms = scalar::max_row_residual(p.view(), p.x);
    const double mv = avx2::max_row_residual(p.view(), p.x);
    REQUIRE(std::memcmp(&ms, &mv, sizeof(double)) == 0);
  }
}

TEST_CASE("avx2 kernel handles values of very different magnitude identically") {
  if (!isa_available(Isa::avx2)) return;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> e(-30.0, 30.0);
  for (int trial = 0; trial < 200; ++trial) {
    Problem p = random_problem(rng, 13, 5);
    for (auto& v : p.a) v *= std::exp2(e(rng));
    std::vector<double> s(p.rows), v(p.rows);
    scalar::row_residuals(p.view(), p.x, s);
    avx2::row_residuals(p.view(), p.x, v);
    REQUIRE(same_bits(s, v));
  }
}
#endif
