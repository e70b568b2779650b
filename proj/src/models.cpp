#include "aipw/models.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "aipw/kernels.hpp"

namespace aipw {

namespace {

constexpr const char* kInterceptLabel = "(intercept)";

void check_propensity(std::span<const double> pi, std::size_t n) {
  if (pi.size() != n) throw Error(ErrorCode::DimensionMismatch, "propensity vector length differs from dataset");
  for (double p : pi) {
    if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "propensities must lie in (0, 1]");
  }
}

}  // namespace

Dataset::Dataset(std::vector<double> t, std::vector<double> y, std::map<std::string, std::vector<double>> columns)
    : t_(std::move(t)), y_(std::move(y)), columns_(std::move(columns)) {
  const std::size_t n = t_.size();
  if (n < 2) throw Error(ErrorCode::DataError, "a dataset needs at least two rows");
  if (y_.size() != n) throw Error(ErrorCode::DataError, "outcome and indicator lengths differ");
  ty_.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string row = "row " + std::to_string(i + 1);
    if (t_[i] == 1.0) {
      if (!std::isfinite(y_[i])) throw Error(ErrorCode::DataError, row + ": outcome missing where t = 1");
      ty_[i] = y_[i];
    } else if (t_[i] == 0.0) {
      if (!std::isnan(y_[i])) throw Error(ErrorCode::DataError, row + ": outcome present where t = 0");
    } else {
      throw Error(ErrorCode::DataError, row + ": indicator must be 0 or 1");
    }
  }
  for (const auto& [name, values] : columns_) {
    if (values.size() != n) throw Error(ErrorCode::DataError, "column '" + name + "' has the wrong length");
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(values[i])) {
        throw Error(ErrorCode::DataError, "row " + std::to_string(i + 1) + ": column '" + name + "' is not finite");
      }
    }
  }
}

std::span<const double> Dataset::column(const std::string& name) const {
  auto it = columns_.find(name);
  if (it == columns_.end()) throw Error(ErrorCode::MissingColumn, "no column named '" + name + "'");
  return it->second;
}

std::size_t Dataset::complete_cases() const noexcept {
  return static_cast<std::size_t>(std::count(t_.begin(), t_.end(), 1.0));
}

DesignMatrix build_design(const Dataset& d, const BasisSpec& spec, std::optional<std::span<const double>> pi) {
  std::set<std::string> seen;
  for (const auto& name : spec.columns) {
    if (!seen.insert(name).second) throw Error(ErrorCode::InvalidArgument, "duplicate basis column '" + name + "'");
    if (!d.has_column(name)) throw Error(ErrorCode::MissingColumn, "no column named '" + name + "'");
  }
  if (spec.inv_propensity && !pi) {
    throw Error(ErrorCode::MissingPropensity, "basis includes the inverse-propensity regressor but no propensities were given");
  }
  DesignMatrix x;
  const std::size_t n = d.size();
  if (spec.intercept) x.append_column(kInterceptLabel, std::vector<double>(n, 1.0));
  for (const auto& name : spec.columns) x.append_column(name, d.column(name));
  if (spec.inv_propensity) {
    check_propensity(*pi, n);
    std::vector<double> inv(n);
    for (std::size_t i = 0; i < n; ++i) inv[i] = 1.0 / (*pi)[i];
    x.append_column(kInversePropensityTag, inv);
  }
  if (x.cols() == 0) throw Error(ErrorCode::InvalidArgument, "empty basis");
  return x;
}

std::string_view to_string(FitMode mode) noexcept {
  switch (mode) {
    case FitMode::OLS: return "OLS";
    case FitMode::WLS: return "WLS";
    case FitMode::SRR: return "SRR";
  }
  return "?";
}

FittedOutcome fit_outcome(const Dataset& d, const BasisSpec& spec, FitMode mode,
                          std::optional<std::span<const double>> pi) {
  if (mode != FitMode::OLS && !pi) {
    throw Error(ErrorCode::MissingPropensity, std::string(to_string(mode)) + " fit needs fitted propensities");
  }
  if (pi) check_propensity(*pi, d.size());

  FittedOutcome fit;
  fit.spec = spec;
  fit.mode = mode;
  if (mode == FitMode::SRR) fit.spec.inv_propensity = true;

  const DesignMatrix x = build_design(d, fit.spec, pi);
  if (d.complete_cases() < x.cols()) {
    throw Error(ErrorCode::TooFewCompleteCases, std::to_string(d.complete_cases()) + " complete cases for " +
                                                    std::to_string(x.cols()) + " outcome coefficients");
  }
  std::vector<double> w(d.t().begin(), d.t().end());
  if (mode == FitMode::WLS) {
    for (std::size_t i = 0; i < w.size(); ++i) w[i] /= (*pi)[i];
  }
  try {
    fit.beta = least_squares(x, d.y(), std::span<const double>(w)).coefficients;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::RankDeficient && mode == FitMode::SRR) {
      throw Error(ErrorCode::RankDeficient,
                  std::string(e.what()) + " (SRR design augmented by 1/pi is unstable for small or constant propensities)");
    }
    throw;
  }
  return fit;
}

std::vector<double> predict_outcome(const FittedOutcome& f, const Dataset& d, std::optional<std::span<const double>> pi) {
  const DesignMatrix x = build_design(d, f.spec, pi);
  if (x.cols() != f.beta.size()) throw Error(ErrorCode::DimensionMismatch, "coefficient count differs from basis");
  std::vector<double> m(d.size(), 0.0);
  for (std::size_t k = 0; k < x.cols(); ++k) kernels::axpy(f.beta[k], x.column(k), m);
  return m;
}

DesignMatrix FittedOutcome::gradient(const Dataset& d, std::optional<std::span<const double>> pi) const {
  return build_design(d, spec, pi);
}

DesignMatrix FittedOutcome::estimating_weights(const Dataset& d, std::optional<std::span<const double>> pi) const {
  DesignMatrix a = build_design(d, spec, pi);
  if (mode == FitMode::WLS) {
    if (!pi) throw Error(ErrorCode::MissingPropensity, "WLS estimating weights need propensities");
    for (std::size_t k = 0; k < a.cols(); ++k) {
      auto col = a.column(k);
      kernels::active().divide(col.data(), pi->data(), col.data(), col.size());
    }
  }
  return a;
}

std::vector<double> outcome_equation_residual(const FittedOutcome& f, const Dataset& d, std::span<const double> m,
                                              std::optional<std::span<const double>> pi) {
  const DesignMatrix a = f.estimating_weights(d, pi);
  std::vector<double> r(d.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = d.ty()[i] - d.t()[i] * m[i];
  std::vector<double> out(a.cols());
  for (std::size_t k = 0; k < a.cols(); ++k) out[k] = kernels::dot(a.column(k), r);
  return out;
}

FittedPropensity fit_propensity(const Dataset& d, const BasisSpec& spec, std::optional<double> floor,
                                const NewtonOptions& options) {
  if (floor && !(*floor > 0.0 && *floor < 0.5)) {
    throw Error(ErrorCode::InvalidArgument, "propensity floor must lie in (0, 0.5)");
  }
  if (spec.inv_propensity) throw Error(ErrorCode::InvalidArgument, "propensity basis cannot use the inverse-propensity regressor");
  const DesignMatrix c = build_design(d, spec);
  SolveReport solve = logistic_newton(c, d.t(), options);

  FittedPropensity fit;
  fit.spec = spec;
  fit.alpha = std::move(solve.coefficients);
  fit.floor = floor;
  fit.iterations = solve.iterations;
  std::vector<double> eta(d.size(), 0.0);
  for (std::size_t k = 0; k < c.cols(); ++k) kernels::axpy(fit.alpha[k], c.column(k), eta);
  fit.pi_raw.resize(d.size());
  for (std::size_t i = 0; i < eta.size(); ++i) fit.pi_raw[i] = expit(eta[i]);
  fit.pi = fit.pi_raw;
  if (floor) {
    for (double& p : fit.pi) p = std::max(p, *floor);
  }
  return fit;
}

DesignMatrix FittedPropensity::score_weights(const Dataset& d) const { return build_design(d, spec); }

DesignMatrix FittedPropensity::gradient(const Dataset& d) const {
  DesignMatrix g = build_design(d, spec);
  for (std::size_t k = 0; k < g.cols(); ++k) {
    auto col = g.column(k);
    for (std::size_t i = 0; i < col.size(); ++i) col[i] *= pi_raw[i] * (1.0 - pi_raw[i]);
  }
  return g;
}

}  // namespace aipw
