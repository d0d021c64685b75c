#include "roa/kernels.hpp"

#include <algorithm>
#include <limits>

namespace roa::simd::scalar {

void row_residuals(const RowView& rows, std::span<const double> x, std::span<double> out) {
  const std::size_t m = rows.rows;
  std::fill_n(out.begin(), m, 0.0);
  for (std::size_t j = 0; j < rows.cols; ++j) {
    const double* col = rows.a.data() + j * m;
    const double xj = x[j];
    for (std::size_t i = 0; i < m; ++i) {
      out[i] += col[i] * xj;
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    out[i] -= rows.b[i];
  }
}

double max_row_residual(const RowView& rows, std::span<const double> x) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rows.rows; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < rows.cols; ++j) {
      acc += rows.a[j * rows.rows + i] * x[j];
    }
    worst = std::max(worst, acc - rows.b[i]);
  }
  return worst;
}

}  // namespace roa::simd::scalar
