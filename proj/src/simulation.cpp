#include "aipw/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "aipw/rng.hpp"

namespace aipw {

namespace {

constexpr std::uint64_t kCovariateTag = 0x636f76617269617aull;
constexpr std::uint64_t kIndicatorTag = 0x696e64696361746full;
constexpr std::uint64_t kNoiseTag = 0x6e6f6973652d2d2dull;
constexpr std::uint64_t kOracleKey = 0x6f7261636c652d31ull;

double uniform01(Philox4x32& g) { return std::generate_canonical<double, 53>(g); }

void draw_latent(Philox4x32& g, std::normal_distribution<double>& normal, std::vector<double>& u) {
  for (double& v : u) v = normal(g);
}

}  // namespace

Transform Transform::affine(std::size_t j, double scale, double shift) {
  Transform t;
  t.kind = Kind::Affine;
  t.j = j;
  t.scale = scale;
  t.shift = shift;
  return t;
}

Transform Transform::exp(std::size_t j, double scale) {
  Transform t;
  t.kind = Kind::Exp;
  t.j = j;
  t.scale = scale;
  return t;
}

Transform Transform::ratio(std::size_t j, std::size_t k, double shift) {
  Transform t;
  t.kind = Kind::Ratio;
  t.j = j;
  t.k = k;
  t.shift = shift;
  return t;
}

Transform Transform::power(std::vector<double> weights, double scale, double shift, double exponent) {
  Transform t;
  t.kind = Kind::Power;
  t.weights = std::move(weights);
  t.scale = scale;
  t.shift = shift;
  t.exponent = exponent;
  return t;
}

double Transform::apply(std::span<const double> u) const {
  switch (kind) {
    case Kind::Affine: return scale * u[j] + shift;
    case Kind::Exp: return std::exp(scale * u[j]);
    case Kind::Ratio: return u[j] / (1.0 + std::exp(u[k])) + shift;
    case Kind::Power: {
      double s = 0.0;
      for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * u[i];
      return std::pow(scale * s + shift, exponent);
    }
  }
  return 0.0;
}

void DgpSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigError, "DGP: " + msg); };
  if (q == 0) fail("latent dimension must be positive");
  if (beta.size() != q) fail("beta needs " + std::to_string(q) + " entries");
  if (alpha.size() != q) fail("alpha needs " + std::to_string(q) + " entries");
  if (transforms.size() != q) fail("one transform per latent dimension is required");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) fail("sigma must be finite and nonnegative");
  auto check = [&](const Transform& t) {
    if (t.kind == Transform::Kind::Power) {
      if (t.weights.size() > q) fail("power transform weights exceed latent dimension");
    } else if (t.j >= q || (t.kind == Transform::Kind::Ratio && t.k >= q)) {
      fail("transform references a latent index out of range");
    }
  };
  for (const auto& t : transforms) check(t);
  for (const auto& term : outcome_terms) check(term.second);
}

double DgpSpec::outcome_mean(std::span<const double> u) const {
  double m = beta0;
  for (std::size_t j = 0; j < q; ++j) m += beta[j] * u[j];
  for (const auto& [coef, term] : outcome_terms) m += coef * term.apply(u);
  return m;
}

double DgpSpec::propensity(std::span<const double> u) const {
  double eta = alpha0;
  for (std::size_t j = 0; j < q; ++j) eta += alpha[j] * u[j];
  return expit(eta);
}

DgpSpec DgpSpec::default_spec() {
  DgpSpec s;
  s.q = 4;
  s.beta0 = 20.0;
  s.beta = {2.74, 1.37, 1.37, 1.37};
  s.sigma = 1.0;
  s.alpha0 = 0.0;
  s.alpha = {-1.0, 0.5, -0.25, -0.1};
  s.transforms = {
      Transform::exp(0, 0.15),
      Transform::ratio(1, 0, 1.0),
      Transform::power({1.0, 0.0, 1.0, 0.0}, 0.02, 5.0, 3.0),
      Transform::power({0.0, 1.0, 0.0, 1.0}, 0.15, 4.0, 2.0),
  };
  return s;
}

DgpSpec DgpSpec::mirror_spec() {
  DgpSpec s = default_spec();
  // Curvature along u1, where large u1 makes responses rare.
  s.outcome_terms = {{1.5, Transform::exp(0, 0.75)}};
  return s;
}

StreamSeeds StreamSeeds::derive(std::uint64_t master_seed, std::uint64_t replicate) {
  return {mix64(master_seed ^ kCovariateTag), mix64(master_seed ^ kIndicatorTag), mix64(master_seed ^ kNoiseTag),
          replicate};
}

std::string latent_name(std::size_t j) { return "z" + std::to_string(j + 1); }
std::string observed_name(std::size_t j) { return "x" + std::to_string(j + 1); }

Dataset generate(const DgpSpec& spec, std::size_t n, const StreamSeeds& seeds) {
  spec.validate();
  Philox4x32 cov_rng(seeds.covariates, seeds.stream);
  Philox4x32 ind_rng(seeds.indicator, seeds.stream);
  Philox4x32 noise_rng(seeds.noise, seeds.stream);
  std::normal_distribution<double> cov_normal;
  std::normal_distribution<double> noise_normal;

  const std::size_t q = spec.q;
  std::vector<std::vector<double>> latent(q, std::vector<double>(n));
  std::vector<std::vector<double>> observed(q, std::vector<double>(n));
  std::vector<double> t(n), y(n);
  std::vector<double> u(q);
  for (std::size_t i = 0; i < n; ++i) {
    draw_latent(cov_rng, cov_normal, u);
    const double p = spec.propensity(u);
    t[i] = uniform01(ind_rng) < p ? 1.0 : 0.0;
    const double e = noise_normal(noise_rng);
    y[i] = t[i] == 1.0 ? spec.outcome_mean(u) + spec.sigma * e : std::numeric_limits<double>::quiet_NaN();
    for (std::size_t j = 0; j < q; ++j) {
      latent[j][i] = u[j];
      observed[j][i] = spec.transforms[j].apply(u);
    }
  }
  std::map<std::string, std::vector<double>> columns;
  for (std::size_t j = 0; j < q; ++j) {
    columns.emplace(latent_name(j), std::move(latent[j]));
    columns.emplace(observed_name(j), std::move(observed[j]));
  }
  return Dataset(std::move(t), std::move(y), std::move(columns));
}

TrueMean true_mean(const DgpSpec& spec, std::size_t draws) {
  spec.validate();
  if (spec.outcome_terms.empty()) {
    return {spec.beta0, 0.0, "analytic: outcome linear in mean-zero latent covariates"};
  }
  Philox4x32 g(kOracleKey, 0);
  std::normal_distribution<double> normal;
  std::vector<double> u(spec.q);
  // Welford accumulation keeps the 10^7-draw variance stable.
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    draw_latent(g, normal, u);
    const double v = spec.outcome_mean(u);
    const double delta = v - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (v - mean);
  }
  const double sd = draws > 1 ? std::sqrt(m2 / static_cast<double>(draws - 1)) : 0.0;
  std::ostringstream prov;
  prov << "monte carlo oracle: " << draws << " latent draws";
  return {mean, sd / std::sqrt(static_cast<double>(draws)), prov.str()};
}

double propensity_probe(const DgpSpec& spec, std::size_t draws) {
  spec.validate();
  Philox4x32 g(kOracleKey ^ 0x70726f6265ull, 0);
  std::normal_distribution<double> normal;
  std::vector<double> u(spec.q);
  double lowest = 1.0;
  for (std::size_t i = 0; i < draws; ++i) {
    draw_latent(g, normal, u);
    lowest = std::min(lowest, spec.propensity(u));
  }
  return lowest;
}

std::string_view to_string(Quadrant q) noexcept {
  switch (q) {
    case Quadrant::CC: return "CC";
    case Quadrant::CI: return "CI";
    case Quadrant::IC: return "IC";
    case Quadrant::II: return "II";
  }
  return "?";
}

std::optional<Quadrant> parse_quadrant(std::string_view s) noexcept {
  for (Quadrant q : {Quadrant::CC, Quadrant::CI, Quadrant::IC, Quadrant::II}) {
    if (to_string(q) == s) return q;
  }
  return std::nullopt;
}

void ScenarioConfig::validate(const DgpSpec& spec) const {
  if (replicates < 1) throw Error(ErrorCode::ConfigError, "replicates must be at least 1");
  const std::size_t basis = spec.q + 2;  // intercept, q columns, SRR regressor
  if (n < 10 * basis) {
    throw Error(ErrorCode::ConfigError, "n = " + std::to_string(n) + " is below 10 x basis size (" +
                                            std::to_string(10 * basis) + ")");
  }
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::ConfigError, "CI level must lie in (0, 1)");
  if (estimators.empty()) throw Error(ErrorCode::ConfigError, "no estimators requested");
}

namespace {

BasisSpec basis_for(const DgpSpec& spec, bool correct) {
  BasisSpec b;
  b.intercept = true;
  for (std::size_t j = 0; j < spec.q; ++j) b.columns.push_back(correct ? latent_name(j) : observed_name(j));
  return b;
}

}  // namespace

BasisSpec propensity_basis(const DgpSpec& spec, Quadrant q) {
  return basis_for(spec, q == Quadrant::CC || q == Quadrant::CI);
}

BasisSpec outcome_basis(const DgpSpec& spec, Quadrant q) {
  return basis_for(spec, q == Quadrant::CC || q == Quadrant::IC);
}

AnalysisSetup analysis_setup(const DgpSpec& spec, const ScenarioConfig& cfg) {
  AnalysisSetup setup;
  setup.propensity = propensity_basis(spec, cfg.quadrant);
  setup.outcome = outcome_basis(spec, cfg.quadrant);
  setup.propensity_floor = cfg.propensity_floor;
  setup.options = cfg.options;
  return setup;
}

SummaryRow summarize(std::span<const double> estimates, std::span<const double> ses, double mu0, double level) {
  if (estimates.size() != ses.size()) throw Error(ErrorCode::DimensionMismatch, "estimates and SEs differ in length");
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::InvalidArgument, "CI level must lie in (0, 1)");
  SummaryRow row;
  std::vector<std::size_t> ok;
  for (std::size_t r = 0; r < estimates.size(); ++r) {
    if (std::isfinite(estimates[r]) && std::isfinite(ses[r])) {
      ok.push_back(r);
    } else {
      ++row.failures;
    }
  }
  row.successes = ok.size();
  if (ok.empty()) throw Error(ErrorCode::AllFailed, "every replicate failed");
  const double count = static_cast<double>(ok.size());
  const double z = boost::math::quantile(boost::math::normal(), 0.5 + level / 2.0);

  double mean = 0.0;
  for (std::size_t r : ok) mean += estimates[r];
  mean /= count;
  double ss = 0.0, sq_err = 0.0, abs_err = 0.0, se_sum = 0.0;
  std::size_t covered = 0;
  for (std::size_t r : ok) {
    const double err = estimates[r] - mu0;
    ss += (estimates[r] - mean) * (estimates[r] - mean);
    sq_err += err * err;
    abs_err += std::fabs(err);
    se_sum += ses[r];
    covered += std::fabs(err) <= z * ses[r];
  }
  row.bias = mean - mu0;
  row.pct_bias = mu0 != 0.0 ? 100.0 * row.bias / mu0 : std::numeric_limits<double>::quiet_NaN();
  row.sd = ok.size() > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
  row.rmse = std::sqrt(sq_err / count);
  row.mae = abs_err / count;
  row.coverage = static_cast<double>(covered) / count;
  row.mean_se = se_sum / count;
  row.mcse_bias = row.sd / std::sqrt(count);
  return row;
}

const SummaryRow& MCSummary::row(EstimatorId id) const {
  const std::string_view name = to_string(id);
  for (const auto& r : rows) {
    if (r.estimator == name) return r;
  }
  throw Error(ErrorCode::InvalidArgument, "no summary row for " + std::string(name));
}

ScenarioResult run_scenario(const ScenarioConfig& cfg, const DgpSpec& spec, std::optional<TrueMean> mu0) {
  spec.validate();
  cfg.validate(spec);
  const std::size_t reps = cfg.replicates;
  const std::size_t k = cfg.estimators.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  ScenarioResult result;
  result.estimates.assign(k, std::vector<double>(reps, nan));
  result.ses.assign(k, std::vector<double>(reps, nan));
  const AnalysisSetup setup = analysis_setup(spec, cfg);

  auto run_one = [&](std::size_t r) {
    try {
      const Analysis analysis(generate(spec, cfg.n, StreamSeeds::derive(cfg.master_seed, r)), setup);
      for (std::size_t e = 0; e < k; ++e) {
        try {
          const EstimateReport rep = analysis.evaluate(cfg.estimators[e]);
          if (std::isfinite(rep.mu) && std::isfinite(rep.se)) {
            result.estimates[e][r] = rep.mu;
            result.ses[e][r] = rep.se;
          }
        } catch (const std::exception&) {
          // counted as a failure by summarize()
        }
      }
    } catch (const std::exception&) {
    }
  };

  const unsigned jobs = std::max(1u, std::min<unsigned>(cfg.jobs, static_cast<unsigned>(reps)));
  if (jobs == 1) {
    for (std::size_t r = 0; r < reps; ++r) run_one(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < jobs; ++w) {
      pool.emplace_back([&] {
        for (std::size_t r = next++; r < reps; r = next++) run_one(r);
      });
    }
    for (auto& th : pool) th.join();
  }

  result.summary.mu0 = mu0 ? *mu0 : true_mean(spec);
  for (std::size_t e = 0; e < k; ++e) {
    SummaryRow row;
    try {
      row = summarize(result.estimates[e], result.ses[e], result.summary.mu0.value, cfg.level);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::AllFailed) throw;
      row.bias = row.pct_bias = row.sd = row.rmse = row.mae = row.coverage = row.mean_se = row.mcse_bias = nan;
      row.failures = reps;
    }
    row.estimator = std::string(to_string(cfg.estimators[e]));
    result.summary.rows.push_back(std::move(row));
  }
  return result;
}

TrueInfluence TrueInfluence::doubly_robust(const DgpSpec& spec, double mu0) {
  spec.validate();
  TrueInfluence f;
  f.spec_ = spec;
  f.mu0_ = mu0;
  return f;
}

TrueInfluence TrueInfluence::ipw_pop(const DgpSpec& spec, double mu0, std::size_t draws) {
  spec.validate();
  TrueInfluence f;
  f.spec_ = spec;
  f.mu0_ = mu0;
  f.ipw_ = true;
  const std::size_t s = spec.q + 1;
  std::vector<double> info(s * s, 0.0), cross(s, 0.0), c(s), u(spec.q);
  Philox4x32 g(kOracleKey ^ 0x697077ull, 0);
  std::normal_distribution<double> normal;
  for (std::size_t i = 0; i < draws; ++i) {
    draw_latent(g, normal, u);
    const double p = spec.propensity(u);
    const double m0 = spec.outcome_mean(u);
    c[0] = 1.0;
    std::copy(u.begin(), u.end(), c.begin() + 1);
    for (std::size_t a = 0; a < s; ++a) {
      cross[a] += (1.0 - p) * c[a] * (m0 - mu0);
      for (std::size_t b = 0; b < s; ++b) info[a * s + b] += p * (1.0 - p) * c[a] * c[b];
    }
  }
  f.k_ = solve_spd(std::move(info), std::move(cross), s);
  return f;
}

double TrueInfluence::mean(const Dataset& d) const {
  const std::size_t n = d.size();
  const std::size_t q = spec_.q;
  std::vector<std::span<const double>> latent;
  for (std::size_t j = 0; j < q; ++j) latent.push_back(d.column(latent_name(j)));
  std::vector<double> u(q);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < q; ++j) u[j] = latent[j][i];
    const double p = spec_.propensity(u);
    const double t = d.t()[i];
    const double ty = d.ty()[i];
    if (ipw_) {
      double proj = k_[0];
      for (std::size_t j = 0; j < q; ++j) proj += k_[j + 1] * u[j];
      total += (ty - t * mu0_) / p - (t - p) * proj;
    } else {
      const double m0 = spec_.outcome_mean(u);
      total += m0 - mu0_ + (ty - t * m0) / p;
    }
  }
  return total / static_cast<double>(n);
}

}  // namespace aipw
