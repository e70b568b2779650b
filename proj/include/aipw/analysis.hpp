#pragma once

// Named estimators evaluated against one dataset, each with its influence
// values and sandwich standard error. Working models are fitted once per
// Analysis and shared by every estimator.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aipw/estimators.hpp"
#include "aipw/influence.hpp"
#include "aipw/models.hpp"

namespace aipw {

enum class EstimatorId {
  Reg,
  Imp,
  IpwPop,
  IpwHt,
  IpwNr,
  IpwOpt,
  BcOls,
  BcPop,
  BcNr,
  BcOpt,
  Wls,
  Srr,
  PiCov,
  Hybrid,
  GpiFitted,
  GpiOne,
  GpiInf,
  GpiShrunk,
};

std::string_view to_string(EstimatorId id) noexcept;
std::optional<EstimatorId> parse_estimator(std::string_view name) noexcept;
const std::vector<EstimatorId>& all_estimators();
// BC-OLS, BC-POP, BC-NR, BC-OPT, WLS, SRR
const std::vector<EstimatorId>& doubly_robust_estimators();

struct EstimatorOptions {
  double delta = 0.05;
  double lambda = 0.5;
  int pi_cov_degree = 3;
};

struct AnalysisSetup {
  std::optional<BasisSpec> outcome;
  std::optional<BasisSpec> propensity;
  // Externally supplied plug-ins replace the corresponding fits; nuisance
  // parameters are then treated as known when computing influence values.
  std::optional<std::vector<double>> supplied_pi;
  std::optional<std::vector<double>> supplied_m;
  std::optional<double> propensity_floor;
  NewtonOptions newton;
  EstimatorOptions options;
};

struct EstimateReport {
  std::string name;
  double mu = 0.0;
  double se = 0.0;
  std::size_t n = 0;
  std::optional<double> gamma;
  std::optional<double> c;
  std::vector<double> phi;
};

class Analysis {
 public:
  Analysis(Dataset data, AnalysisSetup setup);

  // Throws the estimator's own error, or the error of a nuisance fit it depends on.
  EstimateReport evaluate(EstimatorId id) const;

  const Dataset& data() const noexcept { return data_; }
  const AnalysisSetup& setup() const noexcept { return setup_; }

  // Propensities and OLS predictions in use; throw the fit error if unavailable.
  std::span<const double> pi() const;
  std::span<const double> m() const;

  const std::optional<FittedPropensity>& propensity_fit() const noexcept { return propensity_; }
  const std::optional<FittedOutcome>& outcome_fit() const noexcept { return outcome_; }

  // Number of propensities strictly below the threshold (0 when unavailable).
  std::size_t small_pi_count(double threshold) const;

 private:
  InfluenceReport model1(double mu, std::span<const double> atilde) const;
  InfluenceReport model2(double mu, std::span<const double> htilde) const;

  Dataset data_;
  AnalysisSetup setup_;
  std::optional<FittedPropensity> propensity_;
  std::optional<FittedOutcome> outcome_;
  std::vector<double> pi_;
  std::vector<double> m_;
  std::optional<Error> pi_error_;
  std::optional<Error> m_error_;
};

}  // namespace aipw
