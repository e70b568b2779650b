#include "aipw/error.hpp"

namespace aipw {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::Separated: return "Separated";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::OneClassOnly: return "OneClassOnly";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::MissingPropensity: return "MissingPropensity";
    case ErrorCode::TooFewCompleteCases: return "TooFewCompleteCases";
    case ErrorCode::NoCompleteCases: return "NoCompleteCases";
    case ErrorCode::DegenerateWeights: return "DegenerateWeights";
    case ErrorCode::InvalidLambda: return "InvalidLambda";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SingularCorrection: return "SingularCorrection";
    case ErrorCode::InsufficientReplicates: return "InsufficientReplicates";
    case ErrorCode::AllFailed: return "AllFailed";
    case ErrorCode::IdentityViolation: return "IdentityViolation";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::DataError: return "DataError";
  }
  return "Unknown";
}

}  // namespace aipw
