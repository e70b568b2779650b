#pragma once

// Data-parallel inner loops shared by the solvers and estimators.
//
// Each kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The active table is chosen once per process from the CPU features
// (override with AIPW_KERNELS=scalar|avx2). Elementwise kernels round
// identically in every variant; reductions may differ in summation order, so
// the variants agree to a few ulps of the summed magnitudes, not bitwise.

#include <cstddef>
#include <span>
#include <string_view>

namespace aipw::kernels {

struct KernelTable {
  std::string_view name;

  // sum_i x_i
  double (*sum)(const double* x, std::size_t n);
  // sum_i x_i y_i
  double (*dot)(const double* x, const double* y, std::size_t n);
  // sum_i w_i x_i y_i
  double (*dot3)(const double* w, const double* x, const double* y, std::size_t n);
  // y_i += a x_i
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // out_i = ty_i / pi_i + (t_i - pi_i) / pi_i * h_i
  void (*aipw_terms)(const double* t, const double* ty, const double* pi, const double* h,
                     double* out, std::size_t n);
  // out_i = x_i / pi_i
  void (*divide)(const double* x, const double* pi, double* out, std::size_t n);
};

const KernelTable& scalar_table() noexcept;

// nullptr when the build or the CPU lacks AVX2.
const KernelTable* avx2_table() noexcept;

// The table every library routine uses; fixed after the first call.
const KernelTable& active() noexcept;

// Span conveniences over the active table. Lengths are checked by callers.
inline double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }

inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}

inline double dot3(std::span<const double> w, std::span<const double> x,
                   std::span<const double> y) {
  return active().dot3(w.data(), x.data(), y.data(), x.size());
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}

}  // namespace aipw::kernels
