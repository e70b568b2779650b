#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aipw/analysis.hpp"
#include "aipw/models.hpp"

namespace aipw {

// Maps the latent normal vector u to one observed covariate.
struct Transform {
  enum class Kind { Affine, Exp, Ratio, Power };
  Kind kind = Kind::Affine;
  std::size_t j = 0;            // latent index (Affine, Exp, Ratio numerator)
  std::size_t k = 0;            // Ratio denominator index
  std::vector<double> weights;  // Power: linear combination over u
  double scale = 1.0;
  double shift = 0.0;
  double exponent = 1.0;

  static Transform affine(std::size_t j, double scale, double shift);
  static Transform exp(std::size_t j, double scale);
  static Transform ratio(std::size_t j, std::size_t k, double shift);
  static Transform power(std::vector<double> weights, double scale, double shift, double exponent);

  double apply(std::span<const double> u) const;
};

struct DgpSpec {
  std::size_t q = 4;
  double beta0 = 20.0;
  std::vector<double> beta;
  double sigma = 1.0;
  double alpha0 = 0.0;
  std::vector<double> alpha;
  // x_j = transforms[j](u); one per latent dimension.
  std::vector<Transform> transforms;
  // Optional nonlinear additions to E(y|u): coefficient * transform(u).
  std::vector<std::pair<double, Transform>> outcome_terms;

  void validate() const;
  double outcome_mean(std::span<const double> u) const;
  double propensity(std::span<const double> u) const;

  // Committed defaults; see README for the tuning targets.
  static DgpSpec default_spec();
  // Outcome is nonlinear where responses are rarely observed.
  static DgpSpec mirror_spec();
};

// Independent Philox streams for the three sources of randomness.
struct StreamSeeds {
  std::uint64_t covariates = 0;
  std::uint64_t indicator = 0;
  std::uint64_t noise = 0;
  std::uint64_t stream = 0;  // replicate index

  static StreamSeeds derive(std::uint64_t master_seed, std::uint64_t replicate);
};

// Columns "z1".."zq" hold u, "x1".."xq" the transformed covariates.
Dataset generate(const DgpSpec& spec, std::size_t n, const StreamSeeds& seeds);

std::string latent_name(std::size_t j);
std::string observed_name(std::size_t j);

struct TrueMean {
  double value = 0.0;
  double mc_se = 0.0;
  std::string provenance;
};

// Analytic beta0 for a linear outcome in mean-zero latents; otherwise a
// fixed-seed Monte Carlo oracle over `draws` latent vectors.
TrueMean true_mean(const DgpSpec& spec, std::size_t draws = 10'000'000);

// Smallest true propensity over a fixed-seed probe of latent draws.
double propensity_probe(const DgpSpec& spec, std::size_t draws = 1'000'000);

enum class Quadrant { CC, CI, IC, II };  // (propensity, outcome) Correct/Incorrect

std::string_view to_string(Quadrant q) noexcept;
std::optional<Quadrant> parse_quadrant(std::string_view s) noexcept;

struct ScenarioConfig {
  Quadrant quadrant = Quadrant::CC;
  std::size_t n = 1000;
  std::size_t replicates = 1000;
  std::uint64_t master_seed = 20070101;
  std::vector<EstimatorId> estimators;
  double level = 0.95;
  unsigned jobs = 1;
  EstimatorOptions options;
  std::optional<double> propensity_floor;

  void validate(const DgpSpec& spec) const;
};

// Analyst bases for a quadrant: latent columns when the model is correct.
BasisSpec propensity_basis(const DgpSpec& spec, Quadrant q);
BasisSpec outcome_basis(const DgpSpec& spec, Quadrant q);
AnalysisSetup analysis_setup(const DgpSpec& spec, const ScenarioConfig& cfg);

struct SummaryRow {
  std::string estimator;
  double bias = 0.0;
  double pct_bias = 0.0;
  double sd = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  double coverage = 0.0;
  double mean_se = 0.0;
  double mcse_bias = 0.0;
  std::size_t successes = 0;
  std::size_t failures = 0;
};

// NaN entries mark failed replicates and are excluded from the moments.
SummaryRow summarize(std::span<const double> estimates, std::span<const double> ses, double mu0, double level);

struct MCSummary {
  TrueMean mu0;
  std::vector<SummaryRow> rows;

  const SummaryRow& row(EstimatorId id) const;
};

struct ScenarioResult {
  MCSummary summary;
  // [estimator][replicate], NaN for failures.
  std::vector<std::vector<double>> estimates;
  std::vector<std::vector<double>> ses;
};

ScenarioResult run_scenario(const ScenarioConfig& cfg, const DgpSpec& spec,
                            std::optional<TrueMean> mu0 = std::nullopt);

// Influence functions at the true parameters, for the linearity diagnostic.
class TrueInfluence {
 public:
  // m0 - mu0 + t (y - m0) / pi0: shared by every DR estimator when both models hold.
  static TrueInfluence doubly_robust(const DgpSpec& spec, double mu0);
  // IPW-POP with pi fitted by logistic ML on (1, u); expectations by Monte Carlo.
  static TrueInfluence ipw_pop(const DgpSpec& spec, double mu0, std::size_t draws = 1'000'000);

  // n^-1 sum phi(z_i) over a generated dataset (needs the latent columns).
  double mean(const Dataset& d) const;

 private:
  DgpSpec spec_;
  double mu0_ = 0.0;
  bool ipw_ = false;
  std::vector<double> k_;  // projection coefficients on (1, u)
};

}  // namespace aipw
