#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "aipw/influence.hpp"
#include "support.hpp"

using namespace aipw;
using support::D4;

namespace {

std::vector<double> negated(const std::vector<double>& v) {
  std::vector<double> out(v);
  for (double& x : out) x = -x;
  return out;
}

const IdentityCheck& find_check(const IdentityReport& r, const std::string& name) {
  for (const auto& c : r.checks) {
    if (c.name == name) return c;
  }
  FAIL("missing check " << name);
  return r.checks.front();
}

DesignMatrix column_matrix(const std::vector<double>& v) {
  DesignMatrix x(v.size(), 1);
  for (std::size_t i = 0; i < v.size(); ++i) x(i, 0) = v[i];
  return x;
}

}  // namespace

TEST_CASE("D4 doubly robust influence and sandwich SE") {
  const D4 d;
  const double mu = 79.0 / 16.0;
  const InfluenceReport r = if_model2(d.t, d.ty, d.pi, mu, negated(d.m));
  const double expected[] = {-63.0 / 16, -11.0 / 16, 41.0 / 16, 33.0 / 16};
  for (int i = 0; i < 4; ++i) CHECK(r.phi[static_cast<std::size_t>(i)] == doctest::Approx(expected[i]).epsilon(1e-14));
  CHECK(r.variance == doctest::Approx(1715.0 / 64.0 / 4.0).epsilon(1e-14));
  CHECK(r.se == doctest::Approx(1.294142452553041).epsilon(1e-14));
  CHECK(sandwich_se(r.phi) == r.se);
}

TEST_CASE("D4 intersection-model influence") {
  const D4 d;
  const std::vector<double> a{0.5, 1, 2, 3}, h{1, -1, 2, 0.5};
  const InfluenceReport r = if_model3(d.t, d.ty, d.m, d.pi, 79.0 / 16.0, a, h);
  const double expected[] = {-23.0 / 16, -19.0 / 16, 81.0 / 16, 25.0 / 16};
  for (int i = 0; i < 4; ++i) CHECK(r.phi[static_cast<std::size_t>(i)] == doctest::Approx(expected[i]).epsilon(1e-14));
}

TEST_CASE("outcome and propensity forms agree pointwise") {
  const auto p = support::random_problem(5000, 77);
  const double mu = mu_aipw(p.t, p.ty, p.pi, negated(p.m));
  std::vector<double> inv(p.pi.size());
  for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / p.pi[i];
  const InfluenceReport one = if_model1(p.t, p.ty, p.m, mu, inv);
  const InfluenceReport two = if_model2(p.t, p.ty, p.pi, mu, negated(p.m));
  for (std::size_t i = 0; i < one.phi.size(); ++i) {
    CHECK(support::rel_diff(one.phi[i], two.phi[i]) <= 1e-12);
  }
}

TEST_CASE("atilde from psi") {
  const std::vector<double> pi{0.5, 0.25};
  const auto a = atilde_from_psi(pi, 2.0, -1.0);
  CHECK(a[0] == 3.0);
  CHECK(a[1] == 7.0);
}

TEST_CASE("one-column outcome correction matches a hand computation") {
  const auto p = support::random_problem(400, 5);
  const std::size_t n = p.t.size();
  std::mt19937_64 g(9);
  std::normal_distribution<double> normal;
  std::vector<double> grad(n), weight(n), atilde(n);
  for (std::size_t i = 0; i < n; ++i) {
    grad[i] = 1.0 + 0.3 * normal(g);
    weight[i] = 0.5 + 0.2 * normal(g);
    atilde[i] = 1.2 / p.pi[i];
  }
  OutcomeCorrection c{column_matrix(grad), column_matrix(weight), PiProxy::ResponseIndicator, {}};
  const InfluenceReport r = if_model1(p.t, p.ty, p.m, 3.0, atilde, c);
  double u = 0.0, m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    u += (p.t[i] * atilde[i] - 1.0) * grad[i];
    m += p.t[i] * weight[i] * grad[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(r.adjusted[i] == doctest::Approx(atilde[i] - u / m * weight[i]).epsilon(1e-12));
  }
}

TEST_CASE("outcome correction vanishes for a = 1/pi with the fitted-propensity proxy") {
  const Dataset d = support::random_dataset(600, 8);
  BasisSpec spec;
  spec.columns = {"x1", "x2"};
  const FittedPropensity prop = fit_propensity(d, spec);
  const FittedOutcome fit = fit_outcome(d, spec, FitMode::WLS, prop.pi);
  const auto m = predict_outcome(fit, d, prop.pi);
  OutcomeCorrection c = outcome_correction(d, fit, prop.pi);
  c.proxy = PiProxy::Fitted;
  std::vector<double> inv(d.size());
  for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / prop.pi[i];
  const InfluenceReport r = if_model1(d.t(), d.ty(), m, mu_reg(m), inv, c);
  for (std::size_t i = 0; i < inv.size(); ++i) CHECK(r.adjusted[i] == doctest::Approx(inv[i]).epsilon(1e-10));

  OutcomeCorrection missing = c;
  missing.pi.clear();
  CHECK_THROWS_AS(if_model1(d.t(), d.ty(), m, 0.0, inv, missing), Error);
}

TEST_CASE("one-column propensity correction matches a hand computation") {
  const auto p = support::random_problem(400, 6);
  const std::size_t n = p.t.size();
  std::vector<double> grad(n), ones(n, 1.0), htilde = negated(p.m);
  for (std::size_t i = 0; i < n; ++i) grad[i] = p.pi[i] * (1.0 - p.pi[i]);
  const double mu = mu_aipw(p.t, p.ty, p.pi, htilde);

  for (HTermAnalog analog : {HTermAnalog::ResponseWeighted, HTermAnalog::AllRows}) {
    const PropensityCorrection c{column_matrix(grad), column_matrix(ones), analog};
    const InfluenceReport r = if_model2(p.t, p.ty, p.pi, mu, htilde, c);
    double v = 0.0, big_n = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double lead = analog == HTermAnalog::ResponseWeighted
                              ? p.t[i] * (p.ty[i] + htilde[i]) / (p.pi[i] * p.pi[i])
                              : p.ty[i] / (p.pi[i] * p.pi[i]) + htilde[i] / p.pi[i];
      v += lead * grad[i];
      big_n += grad[i];
    }
    const double w = v / big_n;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(r.adjusted[i] == doctest::Approx(htilde[i] - w * p.pi[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("identity checks on collapsing and non-collapsing fits") {
  const Dataset d = support::random_dataset(500, 12);
  BasisSpec spec;
  spec.columns = {"x1", "x2"};
  const FittedPropensity prop = fit_propensity(d, spec);
  for (FitMode mode : {FitMode::WLS, FitMode::SRR}) {
    CAPTURE(to_string(mode));
    const FittedOutcome fit = fit_outcome(d, spec, mode, prop.pi);
    std::vector<double> m = predict_outcome(fit, d, prop.pi);
    const IdentityReport ok = check_identities({d.t(), d.ty(), prop.pi, m, mode});
    CHECK(ok.all_passed());
    for (double& x : m) x += 0.5;
    const IdentityReport bad = check_identities({d.t(), d.ty(), prop.pi, m, mode});
    CHECK_FALSE(bad.all_passed());
    CHECK_FALSE(find_check(bad, "collapse_to_mean_prediction").passed());
    CHECK(find_check(bad, "pointwise_dr_influence").passed());
  }

  const FittedOutcome ols = fit_outcome(d, spec, FitMode::OLS);
  const std::vector<double> m = predict_outcome(ols, d);
  const IdentityReport r = check_identities({d.t(), d.ty(), prop.pi, m, FitMode::OLS});
  const IdentityCheck& collapse = find_check(r, "collapse_to_mean_prediction");
  CHECK_FALSE(collapse.applicable);
  CHECK(collapse.note.find("not applicable") != std::string::npos);
  CHECK(r.all_passed());
  CHECK(find_check(r, "gamma_zero_ols").discrepancy == 0.0);
}

TEST_CASE("linearity diagnostic") {
  std::mt19937_64 g(3);
  std::normal_distribution<double> normal;
  const std::size_t n = 400;
  const double mu0 = 2.0;
  std::vector<double> mean_if(100), est(100);
  for (std::size_t r = 0; r < mean_if.size(); ++r) {
    mean_if[r] = normal(g) / std::sqrt(static_cast<double>(n));
    est[r] = mu0 + mean_if[r];
  }
  const LinearityResult lin = linearity_diagnostic(est, mean_if, mu0, n);
  CHECK(lin.correlation == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lin.slope == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::fabs(lin.intercept) < 1e-12);
  CHECK(lin.max_remainder < 1e-12);

  const std::vector<double> few(49, 1.0);
  try {
    linearity_diagnostic(few, few, 0.0, n);
    FAIL("expected InsufficientReplicates");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientReplicates);
  }
}
