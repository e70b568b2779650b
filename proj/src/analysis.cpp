#include "aipw/analysis.hpp"

#include <algorithm>
#include <array>
#include <utility>

namespace aipw {

namespace {

constexpr std::array<std::pair<EstimatorId, std::string_view>, 18> kNames{{
    {EstimatorId::Reg, "reg"},
    {EstimatorId::Imp, "imp"},
    {EstimatorId::IpwPop, "ipw_pop"},
    {EstimatorId::IpwHt, "ipw_ht"},
    {EstimatorId::IpwNr, "ipw_nr"},
    {EstimatorId::IpwOpt, "ipw_opt"},
    {EstimatorId::BcOls, "bc_ols"},
    {EstimatorId::BcPop, "bc_pop"},
    {EstimatorId::BcNr, "bc_nr"},
    {EstimatorId::BcOpt, "bc_opt"},
    {EstimatorId::Wls, "wls"},
    {EstimatorId::Srr, "srr"},
    {EstimatorId::PiCov, "pi_cov"},
    {EstimatorId::Hybrid, "hybrid"},
    {EstimatorId::GpiFitted, "gpi_fitted"},
    {EstimatorId::GpiOne, "gpi_one"},
    {EstimatorId::GpiInf, "gpi_inf"},
    {EstimatorId::GpiShrunk, "gpi_shrunk"},
}};

std::vector<double> negate(std::span<const double> v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = -v[i];
  return out;
}

InfluenceReport plug_in(std::vector<double> contributions, double mu) {
  for (double& c : contributions) c -= mu;
  return make_influence_report(std::move(contributions));
}

}  // namespace

std::string_view to_string(EstimatorId id) noexcept {
  for (const auto& [key, name] : kNames) {
    if (key == id) return name;
  }
  return "?";
}

std::optional<EstimatorId> parse_estimator(std::string_view name) noexcept {
  for (const auto& [key, label] : kNames) {
    if (label == name) return key;
  }
  return std::nullopt;
}

const std::vector<EstimatorId>& all_estimators() {
  static const std::vector<EstimatorId> ids = [] {
    std::vector<EstimatorId> v;
    for (const auto& entry : kNames) v.push_back(entry.first);
    return v;
  }();
  return ids;
}

const std::vector<EstimatorId>& doubly_robust_estimators() {
  static const std::vector<EstimatorId> ids{EstimatorId::BcOls, EstimatorId::BcPop, EstimatorId::BcNr,
                                            EstimatorId::BcOpt, EstimatorId::Wls,   EstimatorId::Srr};
  return ids;
}

Analysis::Analysis(Dataset data, AnalysisSetup setup) : data_(std::move(data)), setup_(std::move(setup)) {
  const std::size_t n = data_.size();
  if (setup_.supplied_pi) {
    if (setup_.supplied_pi->size() != n) throw Error(ErrorCode::DimensionMismatch, "supplied propensities have the wrong length");
    pi_ = *setup_.supplied_pi;
  } else if (setup_.propensity) {
    try {
      propensity_ = fit_propensity(data_, *setup_.propensity, setup_.propensity_floor, setup_.newton);
      pi_ = propensity_->pi;
    } catch (const Error& e) {
      pi_error_ = e;
    }
  } else {
    pi_error_ = Error(ErrorCode::MissingPropensity, "no propensity model or supplied propensities");
  }

  if (setup_.supplied_m) {
    if (setup_.supplied_m->size() != n) throw Error(ErrorCode::DimensionMismatch, "supplied predictions have the wrong length");
    m_ = *setup_.supplied_m;
  } else if (setup_.outcome) {
    try {
      outcome_ = fit_outcome(data_, *setup_.outcome, FitMode::OLS);
      m_ = predict_outcome(*outcome_, data_);
    } catch (const Error& e) {
      m_error_ = e;
    }
  } else {
    m_error_ = Error(ErrorCode::InvalidArgument, "no outcome model or supplied predictions");
  }
}

std::span<const double> Analysis::pi() const {
  if (pi_error_) throw *pi_error_;
  return pi_;
}

std::span<const double> Analysis::m() const {
  if (m_error_) throw *m_error_;
  return m_;
}

std::size_t Analysis::small_pi_count(double threshold) const {
  if (pi_error_) return 0;
  return static_cast<std::size_t>(std::count_if(pi_.begin(), pi_.end(), [&](double p) { return p < threshold; }));
}

InfluenceReport Analysis::model1(double mu, std::span<const double> atilde) const {
  const auto t = data_.t();
  const auto ty = data_.ty();
  if (outcome_) return if_model1(t, ty, m(), mu, atilde, outcome_correction(data_, *outcome_));
  return if_model1(t, ty, m(), mu, atilde);
}

InfluenceReport Analysis::model2(double mu, std::span<const double> htilde) const {
  const auto t = data_.t();
  const auto ty = data_.ty();
  if (propensity_) return if_model2(t, ty, pi(), mu, htilde, propensity_correction(data_, *propensity_));
  return if_model2(t, ty, pi(), mu, htilde);
}

EstimateReport Analysis::evaluate(EstimatorId id) const {
  const auto t = data_.t();
  const auto ty = data_.ty();
  const std::size_t n = data_.size();
  const EstimatorOptions& opt = setup_.options;

  EstimateReport report;
  report.name = std::string(to_string(id));
  report.n = n;
  InfluenceReport influence;

  auto bc = [&](BcVariant variant) {
    const BcEstimate est = mu_bc(t, ty, pi(), m(), variant);
    report.mu = est.mu;
    report.gamma = est.gamma;
    std::vector<double> h(n);
    for (std::size_t i = 0; i < n; ++i) h[i] = -est.gamma - m()[i];
    influence = model2(est.mu, h);
  };
  auto collapse = [&](FitMode mode) {
    if (!setup_.outcome) throw Error(ErrorCode::InvalidArgument, report.name + " needs an outcome basis to refit");
    const CollapseEstimate est =
        mode == FitMode::WLS ? mu_wls(data_, *setup_.outcome, pi()) : mu_srr(data_, *setup_.outcome, pi());
    report.mu = est.mu;
    report.gamma = 0.0;
    influence = model2(est.mu, negate(est.m));
  };
  auto ipw_const = [&](ConstVariant variant) {
    const ConstEstimate est = mu_ipw_const(t, ty, pi(), variant);
    report.mu = est.mu;
    report.c = est.c;
    influence = model2(est.mu, std::vector<double>(n, -est.c));
  };

  switch (id) {
    case EstimatorId::Reg:
    case EstimatorId::GpiInf:
      report.mu = id == EstimatorId::Reg ? mu_reg(m()) : mu_general_pi(t, ty, m(), std::nullopt, PiMode::infinity());
      influence = model1(report.mu, std::vector<double>(n, 0.0));
      break;
    case EstimatorId::Imp:
    case EstimatorId::GpiOne:
      report.mu = id == EstimatorId::Imp ? mu_imp(t, ty, m()) : mu_general_pi(t, ty, m(), std::nullopt, PiMode::one());
      influence = model1(report.mu, std::vector<double>(n, 1.0));
      break;
    case EstimatorId::IpwPop:
      report.mu = mu_ipw_pop(t, ty, pi());
      influence = model2(report.mu, std::vector<double>(n, -report.mu));
      break;
    case EstimatorId::IpwHt:
      report.mu = mu_ipw_ht(t, ty, pi());
      influence = model2(report.mu, std::vector<double>(n, 0.0));
      break;
    case EstimatorId::IpwNr: ipw_const(ConstVariant::NR); break;
    case EstimatorId::IpwOpt: ipw_const(ConstVariant::OPT); break;
    case EstimatorId::BcOls: bc(BcVariant::OLS); break;
    case EstimatorId::BcPop: bc(BcVariant::POP); break;
    case EstimatorId::BcNr: bc(BcVariant::NR); break;
    case EstimatorId::BcOpt: bc(BcVariant::OPT); break;
    case EstimatorId::Wls: collapse(FitMode::WLS); break;
    case EstimatorId::Srr: collapse(FitMode::SRR); break;
    case EstimatorId::PiCov: {
      const PiCovEstimate est = mu_pi_cov(t, ty, pi(), opt.pi_cov_degree);
      report.mu = est.mu;
      // Outcome-family influence for a regression on the pi-polynomial,
      // with pi treated as a fixed covariate.
      OutcomeCorrection correction{est.basis, est.basis, PiProxy::ResponseIndicator, {}};
      influence = if_model1(t, ty, est.fitted, est.mu, std::vector<double>(n, 0.0), correction);
      break;
    }
    case EstimatorId::Hybrid: {
      report.mu = mu_hybrid(t, ty, pi(), m(), opt.delta);
      std::vector<double> c = aipw_contributions(t, ty, pi(), negate(m()));
      for (std::size_t i = 0; i < n; ++i) {
        if (pi()[i] < opt.delta) c[i] = m()[i];
      }
      influence = plug_in(std::move(c), report.mu);
      break;
    }
    case EstimatorId::GpiFitted:
      report.mu = mu_general_pi(t, ty, m(), pi(), PiMode::fitted());
      influence = model2(report.mu, negate(m()));
      break;
    case EstimatorId::GpiShrunk: {
      const PiMode mode = PiMode::shrunk(opt.lambda);
      report.mu = mu_general_pi(t, ty, m(), pi(), mode);
      const std::vector<double> p = general_pi_weights(t, pi(), mode);
      influence = plug_in(aipw_contributions(t, ty, p, negate(m())), report.mu);
      break;
    }
  }
  report.se = influence.se;
  report.phi = std::move(influence.phi);
  return report;
}

}  // namespace aipw
