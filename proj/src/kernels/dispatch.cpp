#include <cstdlib>
#include <string>

#include "roa/kernels.hpp"

namespace roa::simd {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::avx2:
      return "avx2";
    case Isa::scalar:
      break;
  }
  return "scalar";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(ROA_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

namespace {

Isa detect() {
  if (const char* forced = std::getenv("ROA_SIMD"); forced != nullptr && std::string(forced) == "scalar") {
    return Isa::scalar;
  }
  return isa_available(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

}  // namespace

Isa active_isa() {
  static const Isa isa = detect();
  return isa;
}

void row_residuals(const RowView& rows, std::span<const double> x, std::span<double> out) {
#if defined(ROA_HAVE_AVX2)
  if (active_isa() == Isa::avx2) {
    avx2::row_residuals(rows, x, out);
    return;
  }
#endif
  scalar::row_residuals(rows, x, out);
}

double max_row_residual(const RowView& rows, std::span<const double> x) {
#if defined(ROA_HAVE_AVX2)
  if (active_isa() == Isa::avx2) {
    return avx2::max_row_residual(rows, x);
  }
#endif
  return scalar::max_row_residual(rows, x);
}

}  // namespace roa::simd
