#pragma once

// INI run configuration shared by the estimate, simulate and check commands.
// Unknown sections and keys are rejected with ConfigError.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aipw/simulation.hpp"
#include "aipw/table.hpp"

namespace aipw {

struct DataSection {
  std::filesystem::path path;  // resolved against the config file's directory
  DataColumns roles;
  std::optional<std::string> pi;  // supplied propensities
  std::optional<std::string> m;   // supplied outcome predictions
};

struct OutcomeSection {
  BasisSpec basis;
  FitMode mode = FitMode::OLS;
};

struct PropensitySection {
  BasisSpec basis;
  std::optional<double> floor;
};

struct EstimatorSection {
  std::vector<EstimatorId> ids;
  EstimatorOptions options;
  double level = 0.95;
  double small_pi_threshold = 0.02;
};

struct SimulateSection {
  DgpSpec spec;
  Quadrant quadrant = Quadrant::CC;
  std::size_t n = 1000;
  std::size_t replicates = 1000;
  std::uint64_t seed = 20070101;
  double level = 0.95;
  unsigned jobs = 1;
  std::size_t true_mean_draws = 10'000'000;
};

struct OutputSection {
  std::optional<std::filesystem::path> path;
  TableFormat format = TableFormat::Csv;
};

struct CheckSection {
  // Fits whose identities are checked; empty means all three.
  std::vector<FitMode> modes;
  // Replicates for the linearity diagnostic; 0 skips it.
  std::size_t linearity_replicates = 0;
};

struct RunConfig {
  std::uint64_t hash = 0;  // FNV-1a of the file bytes
  std::optional<DataSection> data;
  std::optional<OutcomeSection> outcome;
  std::optional<PropensitySection> propensity;
  EstimatorSection estimators;
  std::optional<SimulateSection> simulate;
  OutputSection output;
  CheckSection check;
};

std::uint64_t fnv1a(std::string_view bytes) noexcept;

// `text` is the file content; relative paths resolve against `base_dir`.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

// "exp 1 0.15", "affine 2 1 0", "ratio 2 1 1", "power 1,0,1,0 0.02 5 3"
// (latent indices are 1-based).
Transform parse_transform(const std::string& text);
std::string format_transform(const Transform& t);

}  // namespace aipw
