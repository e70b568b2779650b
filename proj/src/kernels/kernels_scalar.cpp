#include "kernels_impl.hpp"

namespace aipw::kernels::detail {

double sum_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double dot3_scalar(const double* w, const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * x[i] * y[i];
  return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void aipw_terms_scalar(const double* t, const double* ty, const double* pi, const double* h,
                       double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = ty[i] / pi[i] + (t[i] - pi[i]) / pi[i] * h[i];
  }
}

void divide_scalar(const double* x, const double* pi, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] / pi[i];
}

}  // namespace aipw::kernels::detail
