#include "aipw/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <boost/math/distributions/normal.hpp>

namespace aipw::cli {

namespace {

bool uses_propensity(EstimatorId id) {
  switch (id) {
    case EstimatorId::Reg:
    case EstimatorId::Imp:
    case EstimatorId::GpiOne:
    case EstimatorId::GpiInf: return false;
    default: return true;
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

void emit(const Table& table, const RunConfig& cfg, const Overrides& ov, std::ostream& out) {
  const auto path = ov.out ? ov.out : cfg.output.path;
  if (!path) {
    write_table(out, table, cfg.output.format);
    return;
  }
  std::ofstream file(*path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCode::ConfigError, "cannot write output file '" + path->string() + "'");
  write_table(file, table, cfg.output.format);
  if (!file.flush()) throw Error(ErrorCode::ConfigError, "failed writing '" + path->string() + "'");
}

Dataset load_data(const DataSection& d) { return dataset_from_table(read_csv_file(d.path), d.roles); }

std::vector<double> column_copy(const Dataset& d, const std::string& name) {
  const auto c = d.column(name);
  return {c.begin(), c.end()};
}

AnalysisSetup setup_for_data(const RunConfig& cfg, const Dataset& d) {
  AnalysisSetup setup;
  if (cfg.outcome) setup.outcome = cfg.outcome->basis;
  if (cfg.propensity) {
    setup.propensity = cfg.propensity->basis;
    setup.propensity_floor = cfg.propensity->floor;
  }
  if (cfg.data->pi) setup.supplied_pi = column_copy(d, *cfg.data->pi);
  if (cfg.data->m) setup.supplied_m = column_copy(d, *cfg.data->m);
  setup.options = cfg.estimators.options;
  return setup;
}

std::string status_cell(bool passed, bool applicable) {
  if (!applicable) return "N/A";
  return passed ? "PASS" : "FAIL";
}

}  // namespace

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidLambda: return kConfigError;
    case ErrorCode::AllFailed: return kAllFailed;
    default: return kDataError;
  }
}

int cmd_estimate(const RunConfig& cfg, const Overrides& ov, std::ostream& out, std::ostream& err) {
  if (!cfg.data) throw Error(ErrorCode::ConfigError, "estimate needs a [data] section");
  const Dataset data = load_data(*cfg.data);
  const Analysis analysis(data, setup_for_data(cfg, data));
  const EstimatorSection& es = cfg.estimators;
  const double z = boost::math::quantile(boost::math::normal(), 0.5 + es.level / 2.0);
  const std::size_t small = analysis.small_pi_count(es.small_pi_threshold);

  Table table;
  table.header = {"estimator", "mu", "se", "ci_lower", "ci_upper", "gamma", "c", "small_pi", "status"};
  std::size_t successes = 0;
  for (EstimatorId id : es.ids) {
    std::vector<std::string> row{std::string(to_string(id))};
    try {
      const EstimateReport r = analysis.evaluate(id);
      row.insert(row.end(), {format_double(r.mu), format_double(r.se), format_double(r.mu - z * r.se),
                             format_double(r.mu + z * r.se), optional_cell(r.gamma), optional_cell(r.c),
                             uses_propensity(id) ? std::to_string(small) : "", "ok"});
      ++successes;
    } catch (const Error& e) {
      row.insert(row.end(), {"NA", "NA", "NA", "NA", "", "", "", std::string("error: ") + e.what()});
      err << to_string(id) << ": " << e.what() << '\n';
    }
    table.rows.push_back(std::move(row));
  }
  if (small > 0) {
    table.comments.push_back(std::to_string(small) + " fitted propensities below " +
                             format_double(es.small_pi_threshold));
  }
  emit(table, cfg, ov, out);
  return successes == 0 ? kAllFailed : kOk;
}

int cmd_simulate(const RunConfig& cfg, const Overrides& ov, std::ostream& out, std::ostream&) {
  if (!cfg.simulate) throw Error(ErrorCode::ConfigError, "simulate needs a [simulate] section");
  const SimulateSection& sim = *cfg.simulate;
  ScenarioConfig sc;
  sc.quadrant = sim.quadrant;
  sc.n = sim.n;
  sc.replicates = sim.replicates;
  sc.master_seed = ov.seed.value_or(sim.seed);
  sc.estimators = cfg.estimators.ids;
  sc.level = sim.level;
  sc.jobs = ov.jobs.value_or(sim.jobs);
  sc.options = cfg.estimators.options;
  if (cfg.propensity) sc.propensity_floor = cfg.propensity->floor;
  sc.validate(sim.spec);

  const TrueMean mu0 = true_mean(sim.spec, sim.true_mean_draws);
  const ScenarioResult result = run_scenario(sc, sim.spec, mu0);

  Table table;
  table.comments = {
      "config_hash fnv1a64:" + hex64(cfg.hash),
      "master_seed " + std::to_string(sc.master_seed),
      "quadrant " + std::string(to_string(sc.quadrant)) + " n " + std::to_string(sc.n) + " replicates " +
          std::to_string(sc.replicates) + " level " + format_double(sc.level),
      "mu0 " + format_double(mu0.value) + " mc_se " + format_double(mu0.mc_se) + " (" + mu0.provenance + ")",
  };
  table.header = {"estimator", "bias", "pct_bias", "sd",        "rmse",      "mae",
                  "coverage",  "mean_se", "mcse_bias", "successes", "failures"};
  bool any = false;
  for (const SummaryRow& r : result.summary.rows) {
    table.rows.push_back({r.estimator, format_double(r.bias), format_double(r.pct_bias), format_double(r.sd),
                          format_double(r.rmse), format_double(r.mae), format_double(r.coverage),
                          format_double(r.mean_se), format_double(r.mcse_bias), std::to_string(r.successes),
                          std::to_string(r.failures)});
    any = any || r.successes > 0;
  }
  emit(table, cfg, ov, out);
  return any ? kOk : kAllFailed;
}

int cmd_check(const RunConfig& cfg, const Overrides& ov, std::ostream& out, std::ostream& err) {
  if (!cfg.data && !cfg.simulate) throw Error(ErrorCode::ConfigError, "check needs a [data] or [simulate] section");

  Dataset data;
  std::optional<std::vector<double>> supplied_m;
  std::vector<double> pi;
  std::optional<BasisSpec> outcome_basis;
  if (cfg.data) {
    data = load_data(*cfg.data);
    if (cfg.data->m) supplied_m = column_copy(data, *cfg.data->m);
    if (cfg.data->pi) {
      pi = column_copy(data, *cfg.data->pi);
    } else if (cfg.propensity) {
      pi = fit_propensity(data, cfg.propensity->basis, cfg.propensity->floor, {}).pi;
    } else {
      throw Error(ErrorCode::ConfigError, "check needs [data] pi or a [propensity] section");
    }
    if (cfg.outcome) outcome_basis = cfg.outcome->basis;
  } else {
    const SimulateSection& sim = *cfg.simulate;
    data = generate(sim.spec, sim.n, StreamSeeds::derive(ov.seed.value_or(sim.seed), 0));
    const std::optional<double> floor = cfg.propensity ? cfg.propensity->floor : std::nullopt;
    pi = fit_propensity(data, propensity_basis(sim.spec, sim.quadrant), floor, {}).pi;
    outcome_basis = aipw::outcome_basis(sim.spec, sim.quadrant);
  }
  if (!supplied_m && !outcome_basis) throw Error(ErrorCode::ConfigError, "check needs [data] m or an [outcome] section");

  std::vector<FitMode> modes = cfg.check.modes;
  if (modes.empty()) {
    if (supplied_m) {
      modes.push_back(cfg.outcome ? cfg.outcome->mode : FitMode::OLS);
    } else {
      modes = {FitMode::OLS, FitMode::WLS, FitMode::SRR};
    }
  }

  Table table;
  table.header = {"fit", "check", "discrepancy", "tolerance", "status", "note"};
  bool all_ok = true;
  for (FitMode mode : modes) {
    std::vector<double> m;
    if (supplied_m) {
      m = *supplied_m;
    } else {
      try {
        m = predict_outcome(fit_outcome(data, *outcome_basis, mode, pi), data, pi);
      } catch (const Error& e) {
        table.rows.push_back({std::string(to_string(mode)), "fit", "NA", "NA", "FAIL", e.what()});
        err << to_string(mode) << " fit: " << e.what() << '\n';
        all_ok = false;
        continue;
      }
    }
    const IdentityReport report = check_identities({data.t(), data.ty(), pi, m, mode});
    for (const IdentityCheck& c : report.checks) {
      table.rows.push_back({std::string(to_string(mode)), c.name, format_double(c.discrepancy),
                            format_double(c.tolerance), status_cell(c.passed(), c.applicable), c.note});
    }
    all_ok = all_ok && report.all_passed();
  }

  if (cfg.check.linearity_replicates > 0) {
    if (!cfg.simulate) throw Error(ErrorCode::ConfigError, "the linearity diagnostic needs a [simulate] section");
    const SimulateSection& sim = *cfg.simulate;
    ScenarioConfig sc;
    sc.quadrant = Quadrant::CC;
    sc.n = sim.n;
    sc.replicates = cfg.check.linearity_replicates;
    sc.master_seed = ov.seed.value_or(sim.seed);
    sc.estimators = {EstimatorId::BcOls, EstimatorId::IpwPop};
    sc.jobs = ov.jobs.value_or(sim.jobs);
    sc.options = cfg.estimators.options;
    sc.validate(sim.spec);
    const TrueMean mu0 = true_mean(sim.spec, sim.true_mean_draws);
    const ScenarioResult result = run_scenario(sc, sim.spec, mu0);
    const TrueInfluence truth[2] = {TrueInfluence::doubly_robust(sim.spec, mu0.value),
                                    TrueInfluence::ipw_pop(sim.spec, mu0.value)};
    std::vector<double> mean_if[2];
    for (std::size_t r = 0; r < sc.replicates; ++r) {
      const Dataset d = generate(sim.spec, sc.n, StreamSeeds::derive(sc.master_seed, r));
      for (int e = 0; e < 2; ++e) mean_if[e].push_back(truth[e].mean(d));
    }
    for (int e = 0; e < 2; ++e) {
      const std::string name(to_string(sc.estimators[static_cast<std::size_t>(e)]));
      const LinearityResult lin = linearity_diagnostic(result.estimates[e], mean_if[e], mu0.value, sc.n);
      const bool corr_ok = lin.correlation > 0.98;
      const bool slope_ok = std::fabs(lin.slope - 1.0) <= 0.1;
      table.rows.push_back({"CC", "linearity_correlation[" + name + "]", format_double(1.0 - lin.correlation),
                            "0.02", status_cell(corr_ok, true), "1 - corr(sqrt(n)(mu - mu0), sqrt(n) mean IF)"});
      table.rows.push_back({"CC", "linearity_slope[" + name + "]", format_double(std::fabs(lin.slope - 1.0)), "0.1",
                            status_cell(slope_ok, true), "|slope - 1|"});
      all_ok = all_ok && corr_ok && slope_ok;
    }
  }
  emit(table, cfg, ov, out);
  return all_ok ? kOk : kCheckFailed;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mean estimation with missing outcomes: estimators, simulation studies, identity checks"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  unsigned jobs = 0;
  std::vector<CLI::App*> subs;
  for (const char* name : {"estimate", "simulate", "check"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "INI run configuration")->required();
    sub->add_option("--out", out_path, "output path (default: [output] path or stdout)");
    sub->add_option("--seed", seed, "master seed override");
    sub->add_option("--jobs", jobs, "worker threads for replicates")->check(CLI::PositiveNumber);
    subs.push_back(sub);
  }
  subs[0]->description("estimate the mean from a data file");
  subs[1]->description("run a Monte Carlo study");
  subs[2]->description("check algebraic identities and linearity diagnostics");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  Overrides ov;
  for (CLI::App* sub : subs) {
    if (!sub->parsed()) continue;
    if (sub->count("--out")) ov.out = out_path;
    if (sub->count("--seed")) ov.seed = seed;
    if (sub->count("--jobs")) ov.jobs = jobs;
  }
  try {
    const RunConfig cfg = load_config(config_path);
    if (subs[0]->parsed()) return cmd_estimate(cfg, ov, out, err);
    if (subs[1]->parsed()) return cmd_simulate(cfg, ov, out, err);
    return cmd_check(cfg, ov, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace aipw::cli
