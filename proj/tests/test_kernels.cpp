#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "aipw/kernels.hpp"

using aipw::kernels::KernelTable;

namespace {

struct Inputs {
  std::vector<double> t, ty, pi, h, x, y, w;
};

Inputs make_inputs(std::size_t n, unsigned seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 3.0);
  Inputs in;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = 0.01 + 0.98 * unit(g);
    const double t = unit(g) < p ? 1.0 : 0.0;
    in.t.push_back(t);
    in.pi.push_back(p);
    in.ty.push_back(t * normal(g));
    in.h.push_back(normal(g));
    in.x.push_back(normal(g));
    in.y.push_back(normal(g));
    in.w.push_back(unit(g));
  }
  return in;
}

double abs_sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += std::fabs(x);
  return s;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

}  // namespace

TEST_CASE("scalar reductions are exact on small integers") {
  const KernelTable& k = aipw::kernels::scalar_table();
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y{2, 0, -1, 1, 3};
  const std::vector<double> w{1, 1, 2, 0, 1};
  CHECK(k.sum(x.data(), x.size()) == 15.0);
  CHECK(k.dot(x.data(), y.data(), x.size()) == 18.0);
  CHECK(k.dot3(w.data(), x.data(), y.data(), x.size()) == 11.0);
  CHECK(k.sum(x.data(), 0) == 0.0);
}

TEST_CASE("scalar elementwise kernels") {
  const KernelTable& k = aipw::kernels::scalar_table();
  const std::vector<double> t{1, 0}, ty{3, 0}, pi{0.5, 0.25}, h{-2, 4};
  std::vector<double> out(2);
  k.aipw_terms(t.data(), ty.data(), pi.data(), h.data(), out.data(), 2);
  CHECK(out[0] == doctest::Approx(6.0 + 1.0 * -2.0));
  CHECK(out[1] == doctest::Approx(-1.0 * 4.0));
  k.divide(ty.data(), pi.data(), out.data(), 2);
  CHECK(out[0] == 6.0);
  CHECK(out[1] == 0.0);
  std::vector<double> acc{1, 1};
  k.axpy(2.0, pi.data(), acc.data(), 2);
  CHECK(acc[0] == 2.0);
  CHECK(acc[1] == 1.5);
}

TEST_CASE("active table is one of the known variants") {
  const auto name = aipw::kernels::active().name;
  CHECK((name == "scalar" || name == "avx2"));
  CHECK(&aipw::kernels::active() == &aipw::kernels::active());
}

TEST_CASE("avx2 kernels match the scalar reference") {
  const KernelTable* v = aipw::kernels::avx2_table();
  if (!v) {
    MESSAGE("AVX2 unavailable on this machine; equivalence not exercised");
    return;
  }
  const KernelTable& s = aipw::kernels::scalar_table();
  // Lengths straddle every tail case of the 8-wide unrolled loops.
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 64u, 1001u, 100003u}) {
    CAPTURE(n);
    const Inputs in = make_inputs(n, static_cast<unsigned>(n) + 7u);

    std::vector<double> a(n), b(n);
    s.aipw_terms(in.t.data(), in.ty.data(), in.pi.data(), in.h.data(), a.data(), n);
    v->aipw_terms(in.t.data(), in.ty.data(), in.pi.data(), in.h.data(), b.data(), n);
    CHECK(same_bits(a, b));

    s.divide(in.ty.data(), in.pi.data(), a.data(), n);
    v->divide(in.ty.data(), in.pi.data(), b.data(), n);
    CHECK(same_bits(a, b));

    std::vector<double> ya = in.y, yb = in.y;
    s.axpy(-1.25, in.x.data(), ya.data(), n);
    v->axpy(-1.25, in.x.data(), yb.data(), n);
    CHECK(same_bits(ya, yb));

    // Reductions differ only in association order.
    const double eps = 1e-15;
    CHECK(std::fabs(s.sum(in.x.data(), n) - v->sum(in.x.data(), n)) <= eps * (1.0 + abs_sum(in.x)) * 4.0);
    std::vector<double> prod(n), prod3(n);
    for (std::size_t i = 0; i < n; ++i) {
      prod[i] = in.x[i] * in.y[i];
      prod3[i] = in.w[i] * in.x[i] * in.y[i];
    }
    CHECK(std::fabs(s.dot(in.x.data(), in.y.data(), n) - v->dot(in.x.data(), in.y.data(), n)) <=
          eps * (1.0 + abs_sum(prod)) * 4.0);
    CHECK(std::fabs(s.dot3(in.w.data(), in.x.data(), in.y.data(), n) -
                    v->dot3(in.w.data(), in.x.data(), in.y.data(), n)) <= eps * (1.0 + abs_sum(prod3)) * 4.0);
  }
}

TEST_CASE("avx2 reductions are exact where no rounding occurs") {
  const KernelTable* v = aipw::kernels::avx2_table();
  if (!v) return;
  std::vector<double> x(37), y(37);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = static_cast<double>(i);
    y[i] = static_cast<double>(i % 5) - 2.0;
  }
  CHECK(v->sum(x.data(), x.size()) == 666.0);
  CHECK(v->dot(x.data(), y.data(), x.size()) == aipw::kernels::scalar_table().dot(x.data(), y.data(), x.size()));
}
