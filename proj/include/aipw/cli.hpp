#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "aipw/config.hpp"

namespace aipw::cli {

enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,
  kConfigError = 2,
  kDataError = 3,
  kAllFailed = 4,
};

struct Overrides {
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
};

// Each command writes its table to the configured or overridden output path,
// or to `out` when neither is set. Diagnostics go to `err`.
int cmd_estimate(const RunConfig& cfg, const Overrides& ov, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& cfg, const Overrides& ov, std::ostream& out, std::ostream& err);
int cmd_check(const RunConfig& cfg, const Overrides& ov, std::ostream& out, std::ostream& err);

// Parses argv, loads the config, dispatches, and maps errors to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

int exit_code_for(ErrorCode code) noexcept;

}  // namespace aipw::cli
