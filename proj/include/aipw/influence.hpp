#pragma once

// Influence-function evaluation for the outcome-model family (model I),
// the propensity-model family (model II) and their intersection (model III),
// with the corrections that account for estimated nuisance parameters.
//
// Population expectations are replaced by sample analogs:
//   E[pi0(x) g(x)]  ->  n^-1 sum proxy_i g(x_i), proxy = t (default) or pi-hat
//   E[g(x)]         ->  n^-1 sum g(x_i)
//   E[pi_alpha m0 / pi0]  ->  n^-1 sum t_i y_i pi_alpha(x_i) / pi_i^2

#include <span>
#include <string>
#include <vector>

#include "aipw/estimators.hpp"
#include "aipw/numkernel.hpp"

namespace aipw {

struct InfluenceReport {
  std::vector<double> phi;
  // The a(x_i) (model I) or h(x_i) (model II) actually used, after correction.
  std::vector<double> adjusted;
  double mean = 0.0;
  double variance = 0.0;  // n^-1 sum phi^2
  double se = 0.0;        // sqrt(sum phi^2) / n
};

InfluenceReport make_influence_report(std::vector<double> phi);

// sqrt(sum phi^2) / n
double sandwich_se(std::span<const double> phi);

enum class PiProxy { ResponseIndicator, Fitted };

// Derivative objects of a fitted outcome model, for the estimated-beta correction.
struct OutcomeCorrection {
  DesignMatrix gradient;  // m_beta(x_i), n x p
  DesignMatrix weights;   // A(x_i), n x p
  PiProxy proxy = PiProxy::ResponseIndicator;
  std::vector<double> pi;  // required when proxy == Fitted
};

OutcomeCorrection outcome_correction(const Dataset& d, const FittedOutcome& fit,
                                     std::optional<std::span<const double>> pi = std::nullopt);

// Derivative objects of a fitted propensity model, for the estimated-alpha correction.
// How E[pi_alpha h-tilde / pi] is estimated. ResponseWeighted uses
// t h-tilde / pi^2 so that, paired with t y / pi^2, each summand carries the
// residual y + h-tilde; AllRows uses h-tilde / pi and is noisier when
// y and h-tilde are large but nearly cancel.
enum class HTermAnalog { ResponseWeighted, AllRows };

struct PropensityCorrection {
  DesignMatrix gradient;  // pi_alpha(x_i), n x s
  DesignMatrix score;     // B(x_i), n x s
  HTermAnalog analog = HTermAnalog::ResponseWeighted;
};

PropensityCorrection propensity_correction(const Dataset& d, const FittedPropensity& fit);

// a-tilde(x) = psi1 / pi(x) + psi2
std::vector<double> atilde_from_psi(std::span<const double> pi, double psi1, double psi2);

// phi_i = m_i - mu + t_i a_i (y_i - m_i) with a = a-tilde (beta treated as known).
InfluenceReport if_model1(Vec t, Vec ty, Vec m, double mu, Vec atilde);
// Same with a-tilde corrected for the estimated beta.
InfluenceReport if_model1(Vec t, Vec ty, Vec m, double mu, Vec atilde, const OutcomeCorrection& correction);

// phi_i = t_i y_i / pi_i + (t_i - pi_i)/pi_i h_i - mu with h = h-tilde (alpha known).
InfluenceReport if_model2(Vec t, Vec ty, Vec pi, double mu, Vec htilde);
// Same with h-tilde corrected for the estimated alpha.
InfluenceReport if_model2(Vec t, Vec ty, Vec pi, double mu, Vec htilde, const PropensityCorrection& correction);

// phi_i = m_i - mu + t_i a_i (y_i - m_i) + (t_i - pi_i)/pi_i h_i
InfluenceReport if_model3(Vec t, Vec ty, Vec m, Vec pi, double mu, Vec a, Vec h);

struct IdentityCheck {
  std::string name;
  double discrepancy = 0.0;
  double tolerance = 0.0;
  bool applicable = true;
  std::string note;

  bool passed() const { return !applicable || discrepancy <= tolerance; }
};

struct IdentityReport {
  std::vector<IdentityCheck> checks;
  bool all_passed() const;
};

struct IdentityInputs {
  Vec t;
  Vec ty;
  Vec pi;
  Vec m;
  // The fit that produced m; the weighted-residual and collapse identities
  // hold only for WLS and SRR.
  FitMode mode = FitMode::OLS;
};

IdentityReport check_identities(const IdentityInputs& in);

struct LinearityResult {
  double correlation = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double max_remainder = 0.0;  // max_r |sqrt(n)(mu_r - mu0) - sqrt(n) mean_if_r|
};

// Regresses sqrt(n)(mu_r - mu0) on n^-1/2 sum_i phi(z_i; truth) = sqrt(n) mean_if_r.
LinearityResult linearity_diagnostic(std::span<const double> estimates, std::span<const double> mean_influence,
                                     double mu0, std::size_t n);

}  // namespace aipw
