#include "aipw/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "aipw/kernels.hpp"

namespace aipw {

namespace {

void check_lengths(std::size_t n, std::initializer_list<Vec> vs) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "empty input");
  for (Vec v : vs) {
    if (v.size() != n) throw Error(ErrorCode::DimensionMismatch, "estimator inputs differ in length");
  }
}

void check_pi(Vec pi) {
  for (double p : pi) {
    if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "propensities must lie in (0, 1]");
  }
}

void require_complete_case(Vec t) {
  if (std::none_of(t.begin(), t.end(), [](double v) { return v == 1.0; })) {
    throw Error(ErrorCode::NoCompleteCases, "no observed outcomes");
  }
}

double mean_of(Vec v) { return kernels::sum(v) / static_cast<double>(v.size()); }

// sum_i w_i (ty_i - t_i m_i) / sum_i w_i with w_i = t_i (1 - pi_i)^a / pi_i^b.
double weighted_ratio(Vec t, Vec num, Vec pi, int one_minus_power, int pi_power, const char* what) {
  double top = 0.0;
  double bottom = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == 0.0) continue;
    double w = 1.0 / std::pow(pi[i], pi_power);
    if (one_minus_power > 0) w *= 1.0 - pi[i];
    top += w * num[i];
    bottom += w;
  }
  if (!(bottom > 0.0)) throw Error(ErrorCode::DegenerateWeights, std::string(what) + " denominator is not positive");
  return top / bottom;
}

CollapseEstimate collapse(const Dataset& d, const BasisSpec& outcome, Vec pi, FitMode mode) {
  check_lengths(d.size(), {pi});
  check_pi(pi);
  CollapseEstimate est;
  est.fit = fit_outcome(d, outcome, mode, pi);
  est.m = predict_outcome(est.fit, d, pi);
  const Vec t = d.t();
  const Vec ty = d.ty();
  std::vector<double> h(est.m.size());
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = -est.m[i];
  est.mu = mu_aipw(t, ty, pi, h);
  est.mean_m = mu_reg(est.m);
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (t[i] == 0.0) continue;
    est.weighted_residual += (ty[i] - est.m[i]) / pi[i];
    est.residual_scale += (std::fabs(ty[i]) + std::fabs(est.m[i])) / pi[i];
  }
  const double gap = std::fabs(est.mu - est.mean_m);
  if (gap > 1e-10 * std::max(1.0, std::fabs(est.mean_m))) {
    throw Error(ErrorCode::IdentityViolation,
                std::string(to_string(mode)) + " estimate differs from the mean prediction by " + std::to_string(gap));
  }
  return est;
}

}  // namespace

double mu_reg(Vec m) {
  check_lengths(m.size(), {});
  return mean_of(m);
}

double mu_imp(Vec t, Vec ty, Vec m) {
  check_lengths(t.size(), {ty, m});
  std::vector<double> c(t.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = ty[i] + (1.0 - t[i]) * m[i];
  return mean_of(c);
}

double mu_ipw_pop(Vec t, Vec ty, Vec pi) {
  check_lengths(t.size(), {ty, pi});
  check_pi(pi);
  require_complete_case(t);
  std::vector<double> a(t.size()), b(t.size());
  kernels::active().divide(ty.data(), pi.data(), a.data(), a.size());
  kernels::active().divide(t.data(), pi.data(), b.data(), b.size());
  return kernels::sum(a) / kernels::sum(b);
}

double mu_ipw_ht(Vec t, Vec ty, Vec pi) {
  check_lengths(t.size(), {ty, pi});
  check_pi(pi);
  std::vector<double> a(t.size());
  kernels::active().divide(ty.data(), pi.data(), a.data(), a.size());
  return mean_of(a);
}

ConstEstimate mu_ipw_const(Vec t, Vec ty, Vec pi, ConstVariant variant) {
  check_lengths(t.size(), {ty, pi});
  check_pi(pi);
  require_complete_case(t);
  ConstEstimate est;
  est.c = weighted_ratio(t, ty, pi, 1, variant == ConstVariant::NR ? 1 : 2,
                         variant == ConstVariant::NR ? "IPW-NR constant" : "IPW-OPT constant");
  const std::vector<double> h(t.size(), -est.c);
  est.mu = mu_aipw(t, ty, pi, h);
  return est;
}

double gamma_hat(Vec t, Vec ty, Vec pi, Vec m, GammaVariant variant) {
  check_lengths(t.size(), {ty, pi, m});
  check_pi(pi);
  std::vector<double> r(t.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = ty[i] - t[i] * m[i];
  switch (variant) {
    case GammaVariant::POP: return weighted_ratio(t, r, pi, 0, 1, "gamma POP");
    case GammaVariant::NR: return weighted_ratio(t, r, pi, 1, 1, "gamma NR");
    case GammaVariant::OPT: return weighted_ratio(t, r, pi, 1, 2, "gamma OPT");
  }
  return 0.0;
}

std::vector<double> aipw_contributions(Vec t, Vec ty, Vec pi, Vec h) {
  check_lengths(t.size(), {ty, pi, h});
  check_pi(pi);
  std::vector<double> out(t.size());
  kernels::active().aipw_terms(t.data(), ty.data(), pi.data(), h.data(), out.data(), out.size());
  return out;
}

double mu_aipw(Vec t, Vec ty, Vec pi, Vec h) { return mean_of(aipw_contributions(t, ty, pi, h)); }

std::string_view to_string(BcVariant v) noexcept {
  switch (v) {
    case BcVariant::OLS: return "OLS";
    case BcVariant::POP: return "POP";
    case BcVariant::NR: return "NR";
    case BcVariant::OPT: return "OPT";
  }
  return "?";
}

BcEstimate mu_bc(Vec t, Vec ty, Vec pi, Vec m, BcVariant variant) {
  check_lengths(t.size(), {ty, pi, m});
  check_pi(pi);
  BcEstimate est;
  switch (variant) {
    case BcVariant::OLS: est.gamma = 0.0; break;
    case BcVariant::POP: est.gamma = gamma_hat(t, ty, pi, m, GammaVariant::POP); break;
    case BcVariant::NR: est.gamma = gamma_hat(t, ty, pi, m, GammaVariant::NR); break;
    case BcVariant::OPT: est.gamma = gamma_hat(t, ty, pi, m, GammaVariant::OPT); break;
  }
  const double n = static_cast<double>(t.size());
  double residual = 0.0;
  double imbalance = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    residual += (ty[i] - t[i] * m[i]) / pi[i];
    imbalance += t[i] / pi[i];
  }
  imbalance -= n;
  est.mu = mean_of(m) + residual / n - est.gamma * (imbalance / n);
  return est;
}

BcEstimate mu_bc(const Dataset& d, const FittedOutcome& outcome, const FittedPropensity& propensity,
                 BcVariant variant) {
  const std::vector<double> m = predict_outcome(outcome, d, propensity.pi);
  return mu_bc(d.t(), d.ty(), propensity.pi, m, variant);
}

CollapseEstimate mu_wls(const Dataset& d, const BasisSpec& outcome, Vec pi) {
  return collapse(d, outcome, pi, FitMode::WLS);
}

CollapseEstimate mu_srr(const Dataset& d, const BasisSpec& outcome, Vec pi) {
  return collapse(d, outcome, pi, FitMode::SRR);
}

PiCovEstimate mu_pi_cov(Vec t, Vec ty, Vec pi, int degree) {
  check_lengths(t.size(), {ty, pi});
  check_pi(pi);
  if (degree < 0) throw Error(ErrorCode::InvalidArgument, "pi-cov degree must be nonnegative");
  const std::size_t n = t.size();
  const std::size_t complete = static_cast<std::size_t>(std::count(t.begin(), t.end(), 1.0));
  if (complete < static_cast<std::size_t>(degree) + 1) {
    throw Error(ErrorCode::TooFewCompleteCases, "pi-cov of degree " + std::to_string(degree) + " needs " +
                                                    std::to_string(degree + 1) + " complete cases");
  }
  PiCovEstimate est;
  std::vector<double> power(n, 1.0);
  for (int k = 0; k <= degree; ++k) {
    est.basis.append_column(k == 0 ? "(intercept)" : "pi^" + std::to_string(k), power);
    for (std::size_t i = 0; i < n; ++i) power[i] *= pi[i];
  }
  std::vector<double> y(ty.begin(), ty.end());
  est.coefficients = least_squares(est.basis, y, t).coefficients;
  est.fitted.assign(n, 0.0);
  for (std::size_t k = 0; k < est.coefficients.size(); ++k) {
    kernels::axpy(est.coefficients[k], est.basis.column(k), est.fitted);
  }
  est.mu = mean_of(est.fitted);
  return est;
}

double mu_hybrid(Vec t, Vec ty, Vec pi, Vec m, double delta) {
  check_lengths(t.size(), {ty, pi, m});
  if (!(delta >= 0.0 && std::isfinite(delta))) throw Error(ErrorCode::InvalidArgument, "delta must be finite and nonnegative");
  std::vector<double> h(m.size());
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = -m[i];
  std::vector<double> c = aipw_contributions(t, ty, pi, h);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (pi[i] < delta) c[i] = m[i];
  }
  return mean_of(c);
}

std::vector<double> general_pi_weights(Vec t, std::optional<Vec> pi, PiMode mode) {
  const std::size_t n = t.size();
  switch (mode.kind) {
    case PiMode::Kind::One: return std::vector<double>(n, 1.0);
    case PiMode::Kind::Fitted:
      if (!pi) throw Error(ErrorCode::MissingPropensity, "Fitted mode needs propensities");
      return {pi->begin(), pi->end()};
    case PiMode::Kind::Shrunk: {
      if (!(mode.lambda >= 0.0 && mode.lambda <= 1.0)) {
        throw Error(ErrorCode::InvalidLambda, "shrinkage lambda must lie in [0, 1]");
      }
      if (!pi) throw Error(ErrorCode::MissingPropensity, "Shrunk mode needs propensities");
      const double target = mean_of(t);
      std::vector<double> w(n);
      for (std::size_t i = 0; i < n; ++i) w[i] = (1.0 - mode.lambda) * (*pi)[i] + mode.lambda * target;
      return w;
    }
    case PiMode::Kind::Infinity: break;
  }
  throw Error(ErrorCode::InvalidArgument, "the infinite working propensity has no finite weights");
}

double mu_general_pi(Vec t, Vec ty, Vec m, std::optional<Vec> pi, PiMode mode) {
  check_lengths(t.size(), {ty, m});
  if (pi) check_lengths(t.size(), {*pi});
  if (mode.kind == PiMode::Kind::Infinity) return mu_reg(m);
  const std::vector<double> p = general_pi_weights(t, pi, mode);
  std::vector<double> h(m.size());
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = -m[i];
  return mu_aipw(t, ty, p, h);
}

}  // namespace aipw
