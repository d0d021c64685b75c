#include <immintrin.h>

#include <algorithm>
#include <limits>

#include "roa/kernels.hpp"

namespace roa::simd::avx2 {

namespace {

// Four rows per lane group; each lane walks the columns in order.
inline __m256d residual4(const RowView& rows, std::span<const double> x, std::size_t i) {
  const std::size_t m = rows.rows;
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t j = 0; j < rows.cols; ++j) {
    const __m256d col = _mm256_loadu_pd(rows.a.data() + j * m + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(col, _mm256_set1_pd(x[j])));
  }
  return _mm256_sub_pd(acc, _mm256_loadu_pd(rows.b.data() + i));
}

inline double residual1(const RowView& rows, std::span<const double> x, std::size_t i) {
  double acc = 0.0;
  for (std::size_t j = 0; j < rows.cols; ++j) {
    acc += rows.a[j * rows.rows + i] * x[j];
  }
  return acc - rows.b[i];
}

}  // namespace

void row_residuals(const RowView& rows, std::span<const double> x, std::span<double> out) {
  std::size_t i = 0;
  for (; i + 4 <= rows.rows; i += 4) {
    _mm256_storeu_pd(out.data() + i, residual4(rows, x, i));
  }
  for (; i < rows.rows; ++i) {
    out[i] = residual1(rows, x, i);
  }
}

double max_row_residual(const RowView& rows, std::span<const double> x) {
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  if (rows.rows >= 4) {
    __m256d vmax = _mm256_set1_pd(worst);
    for (; i + 4 <= rows.rows; i += 4) {
      vmax = _mm256_max_pd(vmax, residual4(rows, x, i));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, vmax);
    worst = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
  }
  for (; i < rows.rows; ++i) {
    worst = std::max(worst, residual1(rows, x, i));
  }
  return worst;
}

}  // namespace roa::simd::avx2
