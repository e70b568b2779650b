#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "aipw/numkernel.hpp"

using namespace aipw;

namespace {

DesignMatrix random_design(std::size_t n, std::size_t p, std::mt19937_64& g) {
  std::normal_distribution<double> normal;
  DesignMatrix x(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    for (std::size_t k = 1; k < p; ++k) x(i, k) = normal(g) * static_cast<double>(k);
  }
  return x;
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an aipw::Error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("design matrix construction") {
  DesignMatrix x = DesignMatrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
  CHECK(x.rows() == 3);
  CHECK(x.cols() == 2);
  CHECK(x(1, 0) == 3);
  CHECK(x(2, 1) == 6);
  const std::vector<double> extra{7, 8, 9};
  x.append_column("z", extra);
  CHECK(x.cols() == 3);
  CHECK(x.labels().back() == "z");
  const std::vector<double> mask{1, 0, 1};
  const DesignMatrix s = x.select_rows(mask);
  CHECK(s.rows() == 2);
  CHECK(s(1, 2) == 9);
  CHECK(code_of([&] { x.append_column("bad", std::vector<double>{1, 2}); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("weighted least squares reproduces the exact solution") {
  // Exact answer (-1/11, 21/22) from tests/oracles/d4_oracle.py.
  const DesignMatrix x = DesignMatrix::from_rows({{1, 0}, {1, 1}, {1, 2}, {1, 3}});
  const std::vector<double> y{0, 1, 1, 3}, w{1, 2, 1, 2};
  const SolveReport r = least_squares(x, y, w);
  CHECK(r.coefficients[0] == doctest::Approx(-1.0 / 11.0).epsilon(1e-14));
  CHECK(r.coefficients[1] == doctest::Approx(21.0 / 22.0).epsilon(1e-14));
  CHECK(r.converged);
}

TEST_CASE("least squares residuals are orthogonal to the weighted design") {
  std::mt19937_64 g(11);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 3.0);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 300, p = 6;
    const DesignMatrix x = random_design(n, p, g);
    std::vector<double> y(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = 100.0 + 10.0 * normal(g);
      w[i] = i % 7 == 0 ? 0.0 : unit(g);
    }
    const SolveReport r = least_squares(x, y, w);
    double scale = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
      double s = 0.0, a = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double fit = 0.0;
        for (std::size_t j = 0; j < p; ++j) fit += x(i, j) * r.coefficients[j];
        s += w[i] * x(i, k) * (y[i] - fit);
        a += std::fabs(w[i] * x(i, k) * y[i]);
      }
      scale = std::max(scale, a);
      CHECK(std::fabs(s) <= 1e-8 * a);
    }
    CHECK(r.gradient_norm <= 1e-8 * scale);
  }
}

TEST_CASE("least squares rejects rank-deficient designs") {
  CHECK(code_of([] {
          const DesignMatrix x = DesignMatrix::from_rows({{1, 2}, {1, 2}, {1, 2}});
          least_squares(x, std::vector<double>{1, 2, 3});
        }) == ErrorCode::RankDeficient);
  CHECK(code_of([] {
          const DesignMatrix x = DesignMatrix::from_rows({{1, 2, 4}, {1, 3, 6}, {1, 5, 10}, {1, 1, 2}});
          least_squares(x, std::vector<double>{1, 2, 3, 4});
        }) == ErrorCode::RankDeficient);
  CHECK(code_of([] {
          const DesignMatrix x = DesignMatrix::from_rows({{1, 0}, {1, 0}, {1, 0}});
          least_squares(x, std::vector<double>{1, 2, 3});
        }) == ErrorCode::RankDeficient);
  // Support of two rows for three columns.
  CHECK(code_of([] {
          const DesignMatrix x = DesignMatrix::from_rows({{1, 0, 1}, {1, 1, 0}, {1, 2, 2}, {1, 3, 5}});
          least_squares(x, std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 1, 0, 0});
        }) == ErrorCode::RankDeficient);
}

TEST_CASE("zero weights drop rows") {
  const DesignMatrix x = DesignMatrix::from_rows({{1, 0}, {1, 1}, {1, 2}, {1, 50}});
  const std::vector<double> y{1, 3, 5, -1000};
  const SolveReport r = least_squares(x, y, std::vector<double>{1, 1, 1, 0});
  CHECK(r.coefficients[0] == doctest::Approx(1.0));
  CHECK(r.coefficients[1] == doctest::Approx(2.0));
}

TEST_CASE("intercept-only logistic fit recovers the sample proportion") {
  for (std::size_t ones : {1u, 3u, 17u, 250u, 999u}) {
    const std::size_t n = 1000;
    std::vector<double> t(n, 0.0);
    for (std::size_t i = 0; i < ones; ++i) t[i * (n / ones)] = 1.0;
    DesignMatrix x(n, 1);
    for (std::size_t i = 0; i < n; ++i) x(i, 0) = 1.0;
    const SolveReport r = logistic_newton(x, t);
    const double p = static_cast<double>(ones) / static_cast<double>(n);
    CHECK(std::fabs(expit(r.coefficients[0]) - p) <= 1e-10);
    CHECK(r.converged);
  }
}

TEST_CASE("logistic deviance never increases and the score vanishes") {
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> unit;
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t n = 800;
    const DesignMatrix x = random_design(n, 4, g);
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double eta = 0.2 + 0.7 * x(i, 1) - 0.3 * x(i, 2) + 0.1 * x(i, 3);
      t[i] = unit(g) < expit(eta) ? 1.0 : 0.0;
    }
    const SolveReport r = logistic_newton(x, t);
    for (std::size_t k = 1; k < r.deviance_trace.size(); ++k) {
      CHECK(r.deviance_trace[k] <= r.deviance_trace[k - 1] * (1.0 + 1e-12));
    }
    CHECK(r.gradient_norm <= 1e-10);
  }
}

TEST_CASE("separated data raise Separated") {
  const DesignMatrix x = DesignMatrix::from_rows({{1, -3}, {1, -2}, {1, -1}, {1, 1}, {1, 2}, {1, 3}});
  const std::vector<double> t{0, 0, 0, 1, 1, 1};
  CHECK(code_of([&] { logistic_newton(x, t); }) == ErrorCode::Separated);
}

TEST_CASE("logistic input validation") {
  const DesignMatrix x = DesignMatrix::from_rows({{1}, {1}, {1}});
  CHECK(code_of([&] { logistic_newton(x, std::vector<double>{1, 1, 1}); }) == ErrorCode::OneClassOnly);
  CHECK(code_of([&] { logistic_newton(x, std::vector<double>{1, 0.5, 0}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { logistic_newton(x, std::vector<double>{1, 0}); }) == ErrorCode::DimensionMismatch);
  NewtonOptions tight;
  tight.max_iterations = 1;
  tight.tol = 1e-300;
  const DesignMatrix x2 = DesignMatrix::from_rows({{1, 0.1}, {1, 0.7}, {1, -0.4}, {1, 1.2}, {1, -1.0}});
  CHECK(code_of([&] { logistic_newton(x2, std::vector<double>{1, 0, 1, 1, 0}, tight); }) ==
        ErrorCode::NotConverged);
}

TEST_CASE("expit and deviance are stable at extremes") {
  CHECK(expit(0.0) == 0.5);
  CHECK(expit(800.0) == 1.0);
  CHECK(expit(-800.0) >= 0.0);
  CHECK(expit(-30.0) > 0.0);
  CHECK(expit(2.0) + expit(-2.0) == doctest::Approx(1.0).epsilon(1e-15));
  const std::vector<double> t{1, 0}, eta{800, -800};
  CHECK(binomial_deviance(t, eta) == doctest::Approx(0.0));
  CHECK(std::isfinite(binomial_deviance(std::vector<double>{0}, std::vector<double>{800})));
}

TEST_CASE("dense solvers") {
  const std::vector<double> a{4, 2, 0, 2, 5, 1, 0, 1, 3};
  const std::vector<double> b{6, 8, 4};
  const auto x = solve_spd(a, b, 3);
  const auto y = solve_general(a, b, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < 3; ++j) r += a[i * 3 + j] * x[j];
    CHECK(r == doctest::Approx(b[i]).epsilon(1e-14));
    CHECK(x[i] == doctest::Approx(y[i]).epsilon(1e-14));
  }
  const std::vector<double> singular{1, 2, 2, 4};
  CHECK(code_of([&] { solve_spd(singular, {1, 2}, 2); }) == ErrorCode::RankDeficient);
  CHECK(code_of([&] { solve_general(singular, {1, 2}, 2, ErrorCode::SingularCorrection); }) ==
        ErrorCode::SingularCorrection);
  const std::vector<double> nonsym{0, 1, 1, 0};
  const auto z = solve_general(nonsym, {2, 3}, 2);
  CHECK(z[0] == 3.0);
  CHECK(z[1] == 2.0);
}
