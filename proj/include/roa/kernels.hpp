#pragma once

// Row-residual kernels behind polytope membership.
//
// The coefficient matrix is column-major (m rows, n columns, leading
// dimension m), which is what Eigen stores. Every variant accumulates each
// row's dot product left to right over the columns, without FMA, so the
// SIMD variants return bit-identical results to the scalar reference.

#include <cstddef>
#include <span>
#include <string_view>

namespace roa::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

/// Best variant supported by the running CPU, unless overridden with
/// ROA_SIMD=scalar in the environment. Resolved once.
Isa active_isa();

/// True if this binary carries the given variant and the CPU can run it.
bool isa_available(Isa isa);

struct RowView {
  std::span<const double> a;  // column-major, a.size() == rows * cols
  std::span<const double> b;  // rows
  std::size_t rows = 0;
  std::size_t cols = 0;
};

namespace scalar {
void row_residuals(const RowView& rows, std::span<const double> x, std::span<double> out);
double max_row_residual(const RowView& rows, std::span<const double> x);
}  // namespace scalar

#if defined(ROA_HAVE_AVX2)
namespace avx2 {
void row_residuals(const RowView& rows, std::span<const double> x, std::span<double> out);
double max_row_residual(const RowView& rows, std::span<const double> x);
}  // namespace avx2
#endif

/// out[i] = a_i . x - b_i
void row_residuals(const RowView& rows, std::span<const double> x, std::span<double> out);

/// max_i (a_i . x - b_i); -infinity when there are no rows.
double max_row_residual(const RowView& rows, std::span<const double> x);

}  // namespace roa::simd
