#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "aipw/estimators.hpp"
#include "support.hpp"

using namespace aipw;
using support::D4;

namespace {

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

constexpr double kTight = 1e-14;

std::vector<double> negated(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [](double x) { return -x; });
  return out;
}

}  // namespace

// Expected values: exact fractions from tests/oracles/d4_oracle.py.
TEST_CASE("D4 simple estimators") {
  const D4 d;
  CHECK(mu_reg(d.m) == 4.5);
  CHECK(mu_imp(d.t, d.ty, d.m) == 4.75);
  CHECK(mu_ipw_pop(d.t, d.ty, d.pi) == doctest::Approx(96.0 / 23.0).epsilon(kTight));
  CHECK(mu_ipw_ht(d.t, d.ty, d.pi) == doctest::Approx(6.0).epsilon(kTight));
}

TEST_CASE("D4 constant-augmented IPW") {
  const D4 d;
  const ConstEstimate nr = mu_ipw_const(d.t, d.ty, d.pi, ConstVariant::NR);
  CHECK(nr.c == doctest::Approx(48.0 / 11.0).epsilon(kTight));
  CHECK(nr.mu == doctest::Approx(45.0 / 11.0).epsilon(kTight));
  const ConstEstimate opt = mu_ipw_const(d.t, d.ty, d.pi, ConstVariant::OPT);
  CHECK(opt.c == doctest::Approx(444.0 / 97.0).epsilon(kTight));
  CHECK(opt.mu == doctest::Approx(1551.0 / 388.0).epsilon(kTight));
}

TEST_CASE("D4 gamma and bias-corrected estimators") {
  const D4 d;
  CHECK(gamma_hat(d.t, d.ty, d.pi, d.m, GammaVariant::POP) == doctest::Approx(7.0 / 23.0).epsilon(kTight));
  CHECK(gamma_hat(d.t, d.ty, d.pi, d.m, GammaVariant::NR) == doctest::Approx(3.0 / 11.0).epsilon(kTight));
  CHECK(gamma_hat(d.t, d.ty, d.pi, d.m, GammaVariant::OPT) == doctest::Approx(33.0 / 97.0).epsilon(kTight));

  const BcEstimate ols = mu_bc(d.t, d.ty, d.pi, d.m, BcVariant::OLS);
  CHECK(ols.gamma == 0.0);
  CHECK(ols.mu == doctest::Approx(79.0 / 16.0).epsilon(kTight));
  CHECK(mu_bc(d.t, d.ty, d.pi, d.m, BcVariant::POP).mu == doctest::Approx(221.0 / 46.0).epsilon(kTight));
  CHECK(mu_bc(d.t, d.ty, d.pi, d.m, BcVariant::NR).mu == doctest::Approx(53.0 / 11.0).epsilon(kTight));
  CHECK(mu_bc(d.t, d.ty, d.pi, d.m, BcVariant::OPT).mu == doctest::Approx(929.0 / 194.0).epsilon(kTight));
}

TEST_CASE("D4 AIPW contributions") {
  const D4 d;
  const auto c = aipw_contributions(d.t, d.ty, d.pi, negated(d.m));
  const double expected[] = {1.0, 17.0 / 4.0, 7.5, 7.0};
  for (int i = 0; i < 4; ++i) CHECK(c[static_cast<std::size_t>(i)] == doctest::Approx(expected[i]).epsilon(kTight));
  CHECK(mu_aipw(d.t, d.ty, d.pi, negated(d.m)) == doctest::Approx(79.0 / 16.0).epsilon(kTight));
}

TEST_CASE("D4 hybrid, general-pi and pi-covariate estimators") {
  const D4 d;
  CHECK(mu_hybrid(d.t, d.ty, d.pi, d.m, 0.45) == doctest::Approx(69.0 / 16.0).epsilon(kTight));
  CHECK(mu_general_pi(d.t, d.ty, d.m, d.pi, PiMode::shrunk(1.0)) == doctest::Approx(29.0 / 6.0).epsilon(kTight));
  const PiCovEstimate pc = mu_pi_cov(d.t, d.ty, d.pi, 1);
  CHECK(pc.coefficients[0] == doctest::Approx(69.0 / 13.0).epsilon(1e-13));
  CHECK(pc.coefficients[1] == doctest::Approx(-30.0 / 13.0).epsilon(1e-13));
  CHECK(pc.mu == doctest::Approx(435.0 / 104.0).epsilon(1e-13));
}

TEST_CASE("bias-corrected estimators equal the AIPW form with h = -gamma - m") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto p = support::random_problem(200, seed);
    for (BcVariant v : {BcVariant::OLS, BcVariant::POP, BcVariant::NR, BcVariant::OPT}) {
      CAPTURE(seed);
      CAPTURE(to_string(v));
      const BcEstimate bc = mu_bc(p.t, p.ty, p.pi, p.m, v);
      std::vector<double> h(p.m.size());
      for (std::size_t i = 0; i < h.size(); ++i) h[i] = -bc.gamma - p.m[i];
      CHECK(support::rel_diff(bc.mu, mu_aipw(p.t, p.ty, p.pi, h)) <= 1e-12);
    }
    CHECK(mu_bc(p.t, p.ty, p.pi, p.m, BcVariant::OLS).gamma == 0.0);
  }
}

TEST_CASE("reduction chain holds bitwise") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto p = support::random_problem(150, seed);
    CHECK(mu_general_pi(p.t, p.ty, p.m, std::nullopt, PiMode::one()) == mu_imp(p.t, p.ty, p.m));
    CHECK(mu_general_pi(p.t, p.ty, p.m, std::nullopt, PiMode::infinity()) == mu_reg(p.m));
    CHECK(mu_general_pi(p.t, p.ty, p.m, p.pi, PiMode::fitted()) == mu_aipw(p.t, p.ty, p.pi, negated(p.m)));
    CHECK(mu_hybrid(p.t, p.ty, p.pi, p.m, 0.0) == mu_aipw(p.t, p.ty, p.pi, negated(p.m)));
    const double above = *std::max_element(p.pi.begin(), p.pi.end()) + 0.01;
    CHECK(mu_hybrid(p.t, p.ty, p.pi, p.m, above) == mu_reg(p.m));
    CHECK(mu_general_pi(p.t, p.ty, p.m, p.pi, PiMode::shrunk(0.0)) ==
          mu_general_pi(p.t, p.ty, p.m, p.pi, PiMode::fitted()));
  }
}

TEST_CASE("WLS and SRR collapse onto the mean prediction") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Dataset d = support::random_dataset(300, seed);
    BasisSpec spec;
    spec.columns = {"x1", "x2"};
    const FittedPropensity p = fit_propensity(d, spec);
    for (const CollapseEstimate& e : {mu_wls(d, spec, p.pi), mu_srr(d, spec, p.pi)}) {
      CHECK(std::fabs(e.weighted_residual) <= 1e-8 * e.residual_scale);
      CHECK(support::rel_diff(e.mu, e.mean_m) <= 1e-10);
      CHECK(e.mean_m == doctest::Approx(mu_reg(e.m)).epsilon(kTight));
    }
  }
}

TEST_CASE("fitted-model overload of the bias-corrected estimator") {
  const Dataset d = support::random_dataset(300, 21);
  BasisSpec spec;
  spec.columns = {"x1", "x2"};
  const FittedPropensity p = fit_propensity(d, spec);
  const FittedOutcome f = fit_outcome(d, spec, FitMode::OLS);
  const auto m = predict_outcome(f, d);
  for (BcVariant v : {BcVariant::OLS, BcVariant::POP, BcVariant::NR, BcVariant::OPT}) {
    CHECK(mu_bc(d, f, p, v).mu == mu_bc(d.t(), d.ty(), p.pi, m, v).mu);
  }
}

TEST_CASE("degenerate inputs raise typed errors") {
  const std::vector<double> t{0, 0, 0}, ty{0, 0, 0}, pi{0.5, 0.5, 0.5}, m{1, 2, 3};
  CHECK(code_of([&] { mu_ipw_pop(t, ty, pi); }) == ErrorCode::NoCompleteCases);
  const std::vector<double> t1{1, 1, 0}, ty1{2, 3, 0}, ones{1.0, 1.0, 0.5};
  CHECK(code_of([&] { mu_ipw_const(t1, ty1, ones, ConstVariant::NR); }) == ErrorCode::DegenerateWeights);
  CHECK(code_of([&] { mu_general_pi(t1, ty1, m, ones, PiMode::shrunk(1.5)); }) == ErrorCode::InvalidLambda);
  CHECK(code_of([&] { mu_general_pi(t1, ty1, m, std::nullopt, PiMode::fitted()); }) == ErrorCode::MissingPropensity);
  const std::vector<double> short_pi{0.5};
  CHECK(code_of([&] { mu_ipw_ht(t1, ty1, short_pi); }) == ErrorCode::DimensionMismatch);
}
