#include "aipw/influence.hpp"

#include <algorithm>
#include <cmath>

#include "aipw/kernels.hpp"

namespace aipw {

namespace {

void check_lengths(std::size_t n, std::initializer_list<Vec> vs) {
  for (Vec v : vs) {
    if (v.size() != n) throw Error(ErrorCode::DimensionMismatch, "influence inputs differ in length");
  }
}

void check_rows(const DesignMatrix& x, std::size_t n) {
  if (x.rows() != n) throw Error(ErrorCode::DimensionMismatch, "derivative matrix rows differ from observations");
}

double relative_gap(double a, double b) { return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)}); }

std::vector<double> model1_phi(Vec t, Vec ty, Vec m, double mu, Vec a) {
  std::vector<double> phi(t.size());
  for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = m[i] - mu + a[i] * (ty[i] - t[i] * m[i]);
  return phi;
}

}  // namespace

InfluenceReport make_influence_report(std::vector<double> phi) {
  InfluenceReport r;
  const double n = static_cast<double>(phi.size());
  if (phi.empty()) throw Error(ErrorCode::InvalidArgument, "empty influence vector");
  const double ss = kernels::dot(phi, phi);
  r.mean = kernels::sum(phi) / n;
  r.variance = ss / n;
  r.se = std::sqrt(ss) / n;
  r.phi = std::move(phi);
  return r;
}

double sandwich_se(std::span<const double> phi) {
  if (phi.empty()) throw Error(ErrorCode::InvalidArgument, "empty influence vector");
  for (double v : phi) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite influence value");
  }
  return std::sqrt(kernels::dot(phi, phi)) / static_cast<double>(phi.size());
}

OutcomeCorrection outcome_correction(const Dataset& d, const FittedOutcome& fit, std::optional<std::span<const double>> pi) {
  OutcomeCorrection c;
  c.gradient = fit.gradient(d, pi);
  c.weights = fit.estimating_weights(d, pi);
  if (pi) c.pi.assign(pi->begin(), pi->end());
  return c;
}

PropensityCorrection propensity_correction(const Dataset& d, const FittedPropensity& fit) {
  return {fit.gradient(d), fit.score_weights(d), HTermAnalog::ResponseWeighted};
}

std::vector<double> atilde_from_psi(std::span<const double> pi, double psi1, double psi2) {
  std::vector<double> a(pi.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = psi1 / pi[i] + psi2;
  return a;
}

InfluenceReport if_model1(Vec t, Vec ty, Vec m, double mu, Vec atilde) {
  check_lengths(t.size(), {ty, m, atilde});
  InfluenceReport r = make_influence_report(model1_phi(t, ty, m, mu, atilde));
  r.adjusted.assign(atilde.begin(), atilde.end());
  return r;
}

InfluenceReport if_model1(Vec t, Vec ty, Vec m, double mu, Vec atilde, const OutcomeCorrection& correction) {
  const std::size_t n = t.size();
  check_lengths(n, {ty, m, atilde});
  check_rows(correction.gradient, n);
  check_rows(correction.weights, n);
  const std::size_t p = correction.gradient.cols();
  if (correction.weights.cols() != p) throw Error(ErrorCode::DimensionMismatch, "A and m_beta differ in width");

  Vec proxy = t;
  if (correction.proxy == PiProxy::Fitted) {
    if (correction.pi.size() != n) throw Error(ErrorCode::MissingPropensity, "fitted-propensity proxy needs pi");
    proxy = correction.pi;
  }
  const double nn = static_cast<double>(n);

  // u = E[(pi0 a-tilde - 1) m_beta], M = E[pi0 A m_beta^T]
  std::vector<double> lead(n);
  for (std::size_t i = 0; i < n; ++i) lead[i] = proxy[i] * atilde[i] - 1.0;
  std::vector<double> u(p);
  for (std::size_t k = 0; k < p; ++k) u[k] = kernels::dot(lead, correction.gradient.column(k)) / nn;
  // Stored transposed: mt[k * p + j] = M_jk, so solving mt w = u gives M^-T u.
  std::vector<double> mt(p * p);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = 0; k < p; ++k) {
      mt[k * p + j] = kernels::dot3(proxy, correction.weights.column(j), correction.gradient.column(k)) / nn;
    }
  }
  const std::vector<double> w = solve_general(std::move(mt), std::move(u), p, ErrorCode::SingularCorrection);

  std::vector<double> a(atilde.begin(), atilde.end());
  for (std::size_t j = 0; j < p; ++j) kernels::axpy(-w[j], correction.weights.column(j), a);
  InfluenceReport r = make_influence_report(model1_phi(t, ty, m, mu, a));
  r.adjusted = std::move(a);
  return r;
}

InfluenceReport if_model2(Vec t, Vec ty, Vec pi, double mu, Vec htilde) {
  check_lengths(t.size(), {ty, pi, htilde});
  std::vector<double> phi = aipw_contributions(t, ty, pi, htilde);
  for (double& v : phi) v -= mu;
  InfluenceReport r = make_influence_report(std::move(phi));
  r.adjusted.assign(htilde.begin(), htilde.end());
  return r;
}

InfluenceReport if_model2(Vec t, Vec ty, Vec pi, double mu, Vec htilde, const PropensityCorrection& correction) {
  const std::size_t n = t.size();
  check_lengths(n, {ty, pi, htilde});
  check_rows(correction.gradient, n);
  check_rows(correction.score, n);
  const std::size_t s = correction.gradient.cols();
  if (correction.score.cols() != s) throw Error(ErrorCode::DimensionMismatch, "B and pi_alpha differ in width");
  const double nn = static_cast<double>(n);

  // v = E[pi_alpha (m0 + h-tilde) / pi0], N = E[B pi_alpha^T]
  std::vector<double> lead(n);
  if (correction.analog == HTermAnalog::ResponseWeighted) {
    for (std::size_t i = 0; i < n; ++i) lead[i] = t[i] * (ty[i] + htilde[i]) / (pi[i] * pi[i]);
  } else {
    for (std::size_t i = 0; i < n; ++i) lead[i] = ty[i] / (pi[i] * pi[i]) + htilde[i] / pi[i];
  }
  std::vector<double> v(s);
  for (std::size_t k = 0; k < s; ++k) v[k] = kernels::dot(lead, correction.gradient.column(k)) / nn;
  std::vector<double> nt(s * s);
  for (std::size_t j = 0; j < s; ++j) {
    for (std::size_t k = 0; k < s; ++k) {
      nt[k * s + j] = kernels::dot(correction.score.column(j), correction.gradient.column(k)) / nn;
    }
  }
  const std::vector<double> w = solve_general(std::move(nt), std::move(v), s, ErrorCode::SingularCorrection);

  std::vector<double> proj(n, 0.0);
  for (std::size_t j = 0; j < s; ++j) kernels::axpy(w[j], correction.score.column(j), proj);
  std::vector<double> h(htilde.begin(), htilde.end());
  for (std::size_t i = 0; i < n; ++i) h[i] -= proj[i] * pi[i];

  std::vector<double> phi = aipw_contributions(t, ty, pi, h);
  for (double& x : phi) x -= mu;
  InfluenceReport r = make_influence_report(std::move(phi));
  r.adjusted = std::move(h);
  return r;
}

InfluenceReport if_model3(Vec t, Vec ty, Vec m, Vec pi, double mu, Vec a, Vec h) {
  check_lengths(t.size(), {ty, m, pi, a, h});
  std::vector<double> phi(t.size());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const double resid = t[i] == 0.0 ? 0.0 : ty[i] - m[i];
    phi[i] = m[i] - mu + a[i] * resid + (t[i] - pi[i]) / pi[i] * h[i];
  }
  return make_influence_report(std::move(phi));
}

bool IdentityReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const IdentityCheck& c) { return c.passed(); });
}

IdentityReport check_identities(const IdentityInputs& in) {
  const std::size_t n = in.t.size();
  check_lengths(n, {in.ty, in.pi, in.m});
  IdentityReport report;
  const bool collapsing = in.mode != FitMode::OLS;
  const std::string mode_name(to_string(in.mode));

  {
    IdentityCheck c{"weighted_residual_sum", 0.0, 1e-8, collapsing, ""};
    double sum = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (in.t[i] == 0.0) continue;
      sum += (in.ty[i] - in.m[i]) / in.pi[i];
      scale += (std::fabs(in.ty[i]) + std::fabs(in.m[i])) / in.pi[i];
    }
    c.discrepancy = scale > 0.0 ? std::fabs(sum) / scale : std::fabs(sum);
    c.note = collapsing ? "sum t(y-m)/pi relative to sum t(|y|+|m|)/pi (" + mode_name + ")"
                        : "not applicable (" + mode_name + ")";
    report.checks.push_back(c);
  }

  std::vector<double> neg_m(n);
  for (std::size_t i = 0; i < n; ++i) neg_m[i] = -in.m[i];
  const double mu_dr = mu_aipw(in.t, in.ty, in.pi, neg_m);

  {
    // Outcome-family form with a = 1/pi against propensity-family form with h = -m.
    IdentityCheck c{"pointwise_dr_influence", 0.0, 1e-12, true, "max_i |outcome form - propensity form| / max(1, |term|)"};
    for (std::size_t i = 0; i < n; ++i) {
      const double resid = in.t[i] == 0.0 ? 0.0 : in.ty[i] - in.m[i];
      const double outcome_form = in.m[i] - mu_dr + in.t[i] * resid / in.pi[i];
      const double propensity_form = in.ty[i] / in.pi[i] - (in.t[i] - in.pi[i]) * in.m[i] / in.pi[i] - mu_dr;
      c.discrepancy = std::max(c.discrepancy, relative_gap(outcome_form, propensity_form));
    }
    report.checks.push_back(c);
  }

  for (BcVariant v : {BcVariant::OLS, BcVariant::POP, BcVariant::NR, BcVariant::OPT}) {
    IdentityCheck c{"aipw_form_bc_" + std::string(to_string(v)), 0.0, 1e-12, true,
                    "|bias-corrected route - AIPW route with h = -gamma - m| relative"};
    try {
      const BcEstimate bc = mu_bc(in.t, in.ty, in.pi, in.m, v);
      std::vector<double> h(n);
      for (std::size_t i = 0; i < n; ++i) h[i] = -bc.gamma - in.m[i];
      c.discrepancy = relative_gap(bc.mu, mu_aipw(in.t, in.ty, in.pi, h));
    } catch (const Error& e) {
      c.applicable = false;
      c.note = e.what();
    }
    report.checks.push_back(c);
  }

  {
    IdentityCheck c{"gamma_zero_ols", 0.0, 0.0, true, "gamma reported by the OLS bias-corrected variant"};
    c.discrepancy = std::fabs(mu_bc(in.t, in.ty, in.pi, in.m, BcVariant::OLS).gamma);
    report.checks.push_back(c);
  }

  {
    IdentityCheck c{"collapse_to_mean_prediction", 0.0, 1e-10, collapsing, ""};
    c.discrepancy = relative_gap(mu_dr, mu_reg(in.m));
    c.note = collapsing ? "|mu_aipw(h = -m) - mean(m)| relative (" + mode_name + ")"
                        : "not applicable (" + mode_name + ")";
    report.checks.push_back(c);
  }
  return report;
}

LinearityResult linearity_diagnostic(std::span<const double> estimates, std::span<const double> mean_influence,
                                     double mu0, std::size_t n) {
  const std::size_t r = estimates.size();
  if (mean_influence.size() != r) throw Error(ErrorCode::DimensionMismatch, "replicate vectors differ in length");
  if (r < 50) throw Error(ErrorCode::InsufficientReplicates, std::to_string(r) + " replicates; at least 50 required");
  const double root_n = std::sqrt(static_cast<double>(n));
  std::vector<double> ys(r), xs(r);
  for (std::size_t i = 0; i < r; ++i) {
    ys[i] = root_n * (estimates[i] - mu0);
    xs[i] = root_n * mean_influence[i];
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(r);
  my /= static_cast<double>(r);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  LinearityResult out;
  for (std::size_t i = 0; i < r; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
    sxy += (xs[i] - mx) * (ys[i] - my);
    out.max_remainder = std::max(out.max_remainder, std::fabs(ys[i] - xs[i]));
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw Error(ErrorCode::DegenerateWeights, "replicate values have no spread");
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  out.correlation = sxy / std::sqrt(sxx * syy);
  return out;
}

}  // namespace aipw
