#pragma once

#include <cstddef>

namespace aipw::kernels::detail {

double sum_scalar(const double* x, std::size_t n);
double dot_scalar(const double* x, const double* y, std::size_t n);
double dot3_scalar(const double* w, const double* x, const double* y, std::size_t n);
void axpy_scalar(double a, const double* x, double* y, std::size_t n);
void aipw_terms_scalar(const double* t, const double* ty, const double* pi, const double* h,
                       double* out, std::size_t n);
void divide_scalar(const double* x, const double* pi, double* out, std::size_t n);

#if defined(AIPW_HAVE_AVX2)
double sum_avx2(const double* x, std::size_t n);
double dot_avx2(const double* x, const double* y, std::size_t n);
double dot3_avx2(const double* w, const double* x, const double* y, std::size_t n);
void axpy_avx2(double a, const double* x, double* y, std::size_t n);
void aipw_terms_avx2(const double* t, const double* ty, const double* pi, const double* h,
                     double* out, std::size_t n);
void divide_avx2(const double* x, const double* pi, double* out, std::size_t n);
#endif

}  // namespace aipw::kernels::detail
