#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aipw/numkernel.hpp"

namespace aipw {

// Observed data z = (t, x, t*y): the response indicator, named covariate
// columns, and an outcome that exists only where t = 1 (NaN elsewhere).
class Dataset {
 public:
  Dataset() = default;
  // Validates the missingness pattern; throws DataError on violations.
  Dataset(std::vector<double> t, std::vector<double> y, std::map<std::string, std::vector<double>> columns);

  std::size_t size() const noexcept { return t_.size(); }
  std::span<const double> t() const noexcept { return t_; }
  std::span<const double> y() const noexcept { return y_; }
  // t_i * y_i with zeros where the outcome is missing.
  std::span<const double> ty() const noexcept { return ty_; }

  bool has_column(const std::string& name) const { return columns_.count(name) != 0; }
  std::span<const double> column(const std::string& name) const;
  const std::map<std::string, std::vector<double>>& columns() const noexcept { return columns_; }

  std::size_t complete_cases() const noexcept;

 private:
  std::vector<double> t_;
  std::vector<double> y_;
  std::vector<double> ty_;
  std::map<std::string, std::vector<double>> columns_;
};

inline constexpr const char* kInversePropensityTag = "inv-propensity";

// Linear-in-parameters basis: optional intercept, then named columns, then
// optionally the synthetic 1/pi regressor used by the SRR fit.
struct BasisSpec {
  bool intercept = true;
  std::vector<std::string> columns;
  bool inv_propensity = false;

  std::size_t size() const noexcept { return (intercept ? 1 : 0) + columns.size() + (inv_propensity ? 1 : 0); }
};

DesignMatrix build_design(const Dataset& d, const BasisSpec& spec,
                          std::optional<std::span<const double>> pi = std::nullopt);

enum class FitMode { OLS, WLS, SRR };

std::string_view to_string(FitMode mode) noexcept;

struct FittedOutcome {
  BasisSpec spec;  // includes the inv-propensity regressor for SRR
  std::vector<double> beta;
  FitMode mode = FitMode::OLS;

  // A(x_i, beta) for every row, as an n x p matrix: b(x) for OLS and SRR,
  // b(x) / pi for WLS.
  DesignMatrix estimating_weights(const Dataset& d, std::optional<std::span<const double>> pi) const;
  // m_beta(x_i) = b(x_i) for the linear basis.
  DesignMatrix gradient(const Dataset& d, std::optional<std::span<const double>> pi) const;
};

FittedOutcome fit_outcome(const Dataset& d, const BasisSpec& spec, FitMode mode,
                          std::optional<std::span<const double>> pi = std::nullopt);

std::vector<double> predict_outcome(const FittedOutcome& f, const Dataset& d,
                                    std::optional<std::span<const double>> pi = std::nullopt);

// sum_i t_i A(x_i) (y_i - m_i), the estimating-equation residual of a fit.
std::vector<double> outcome_equation_residual(const FittedOutcome& f, const Dataset& d,
                                              std::span<const double> m,
                                              std::optional<std::span<const double>> pi);

struct FittedPropensity {
  BasisSpec spec;
  std::vector<double> alpha;
  std::optional<double> floor;
  std::vector<double> pi_raw;  // expit(c(x) alpha), before flooring
  std::vector<double> pi;      // reported probabilities, floored when set
  int iterations = 0;

  // B(x_i, alpha) = c(x_i), the logistic ML score weights, n x s.
  DesignMatrix score_weights(const Dataset& d) const;
  // pi_alpha(x_i) = pi_i (1 - pi_i) c(x_i), from the unfloored fit, n x s.
  DesignMatrix gradient(const Dataset& d) const;
};

FittedPropensity fit_propensity(const Dataset& d, const BasisSpec& spec,
                                std::optional<double> floor = std::nullopt,
                                const NewtonOptions& options = {});

}  // namespace aipw
