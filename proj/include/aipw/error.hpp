#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aipw {

enum class ErrorCode {
  DimensionMismatch,
  RankDeficient,
  Separated,
  NotConverged,
  OneClassOnly,
  MissingColumn,
  MissingPropensity,
  TooFewCompleteCases,
  NoCompleteCases,
  DegenerateWeights,
  InvalidLambda,
  InvalidArgument,
  SingularCorrection,
  InsufficientReplicates,
  AllFailed,
  IdentityViolation,
  ConfigError,
  DataError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so the
// Monte Carlo harness and the CLI can classify it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace aipw
