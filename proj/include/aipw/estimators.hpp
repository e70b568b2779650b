#pragma once

// Point estimators of the population mean under MAR missingness.
//
// All plug-in estimators take the observed pieces as parallel vectors:
//   t   response indicator (0/1)
//   ty  t_i * y_i (0 where y is missing)
//   pi  fitted propensities pi(x_i, alpha-hat) in (0, 1]
//   m   outcome-model predictions m(x_i, beta-hat) on every row
// Degenerate denominators raise DegenerateWeights or NoCompleteCases rather
// than returning NaN.

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "aipw/models.hpp"

namespace aipw {

using Vec = std::span<const double>;

// n^-1 sum m_i
double mu_reg(Vec m);

// n^-1 sum {t_i y_i + (1 - t_i) m_i}
double mu_imp(Vec t, Vec ty, Vec m);

// sum(t y / pi) / sum(t / pi)
double mu_ipw_pop(Vec t, Vec ty, Vec pi);

// n^-1 sum t y / pi
double mu_ipw_ht(Vec t, Vec ty, Vec pi);

enum class ConstVariant { NR, OPT };

struct ConstEstimate {
  double mu = 0.0;
  double c = 0.0;  // the fitted constant; the augmentation uses h = -c
};

// IPW with a constant augmentation h = -c. NR weights complete cases by
// (1 - pi)/pi, OPT by (1 - pi)/pi^2.
ConstEstimate mu_ipw_const(Vec t, Vec ty, Vec pi, ConstVariant variant);

enum class GammaVariant { POP, NR, OPT };

// Weighted complete-case mean residual; weights t/pi (POP), t(1-pi)/pi (NR),
// t(1-pi)/pi^2 (OPT).
double gamma_hat(Vec t, Vec ty, Vec pi, Vec m, GammaVariant variant);

// Per-observation AIPW terms t y/pi + (t - pi)/pi * h.
std::vector<double> aipw_contributions(Vec t, Vec ty, Vec pi, Vec h);

// n^-1 sum of aipw_contributions.
double mu_aipw(Vec t, Vec ty, Vec pi, Vec h);

enum class BcVariant { OLS, POP, NR, OPT };

std::string_view to_string(BcVariant v) noexcept;

struct BcEstimate {
  double mu = 0.0;
  double gamma = 0.0;
};

// Bias-corrected regression estimator, evaluated as
//   mean(m) + n^-1 sum t (y - m)/pi - gamma * n^-1 sum (t - pi)/pi
// which is algebraically the AIPW form with h = -gamma - m.
BcEstimate mu_bc(Vec t, Vec ty, Vec pi, Vec m, BcVariant variant);

// Same, computing m and pi from fitted models (outcome fit should be OLS).
BcEstimate mu_bc(const Dataset& d, const FittedOutcome& outcome, const FittedPropensity& propensity,
                 BcVariant variant);

// Estimators whose outcome fit zeroes sum t (y - m)/pi, so the AIPW form
// collapses onto the regression mean.
struct CollapseEstimate {
  double mu = 0.0;
  double mean_m = 0.0;
  // sum t (y - m)/pi and its scale sum t (|y| + |m|)/pi
  double weighted_residual = 0.0;
  double residual_scale = 0.0;
  std::vector<double> m;
  FittedOutcome fit;
};

CollapseEstimate mu_wls(const Dataset& d, const BasisSpec& outcome, Vec pi);
CollapseEstimate mu_srr(const Dataset& d, const BasisSpec& outcome, Vec pi);

struct PiCovEstimate {
  double mu = 0.0;
  std::vector<double> coefficients;  // on 1, pi, ..., pi^degree
  std::vector<double> fitted;        // prediction on every row
  DesignMatrix basis;
};

// Complete-case least squares of y on a polynomial in pi, averaged over all rows.
PiCovEstimate mu_pi_cov(Vec t, Vec ty, Vec pi, int degree = 3);

// Rows with pi < delta contribute m; the rest their AIPW term with h = -m.
double mu_hybrid(Vec t, Vec ty, Vec pi, Vec m, double delta = 0.05);

struct PiMode {
  enum class Kind { Fitted, One, Infinity, Shrunk };
  Kind kind = Kind::Fitted;
  double lambda = 0.0;  // Shrunk only

  static PiMode fitted() { return {Kind::Fitted, 0.0}; }
  static PiMode one() { return {Kind::One, 0.0}; }
  static PiMode infinity() { return {Kind::Infinity, 0.0}; }
  static PiMode shrunk(double lambda) { return {Kind::Shrunk, lambda}; }
};

// The propensities used by mu_general_pi for a finite mode.
std::vector<double> general_pi_weights(Vec t, std::optional<Vec> pi, PiMode mode);

// n^-1 sum [t y / p - (t - p)/p * m] for a chosen working propensity p.
// Infinity is the limit n^-1 sum m, evaluated symbolically.
double mu_general_pi(Vec t, Vec ty, Vec m, std::optional<Vec> pi, PiMode mode);

}  // namespace aipw
