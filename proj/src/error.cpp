#include "airguard/error.hpp"

namespace airguard {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::CornerBehindCamera: return "CornerBehindCamera";
    case ErrorCode::DegenerateObservation: return "DegenerateObservation";
    case ErrorCode::NegativeDistance: return "NegativeDistance";
    case ErrorCode::ImperceptibleFlow: return "ImperceptibleFlow";
    case ErrorCode::InsideJetCore: return "InsideJetCore";
    case ErrorCode::StaleObservation: return "StaleObservation";
    case ErrorCode::NoExposure: return "NoExposure";
    case ErrorCode::CalibrationFailed: return "CalibrationFailed";
    case ErrorCode::SampleTooSmall: return "SampleTooSmall";
    case ErrorCode::ConstantSample: return "ConstantSample";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ZeroVarianceDifferences: return "ZeroVarianceDifferences";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::PayloadOutOfRange: return "PayloadOutOfRange";
    case ErrorCode::BadHeader: return "BadHeader";
    case ErrorCode::BadChecksum: return "BadChecksum";
    case ErrorCode::UnknownOpcode: return "UnknownOpcode";
    case ErrorCode::BadLength: return "BadLength";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
  }
  return "Unknown";
}

}  // namespace airguard
