#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace airguard {

enum class ErrorCode {
  InvalidArgument,
  InvalidConfig,
  // geometry
  CornerBehindCamera,
  DegenerateObservation,
  // safety
  NegativeDistance,
  // airflow
  ImperceptibleFlow,
  InsideJetCore,
  // pipeline
  StaleObservation,
  // simworld
  NoExposure,
  CalibrationFailed,
  // stats
  SampleTooSmall,
  ConstantSample,
  LengthMismatch,
  ZeroVarianceDifferences,
  EmptySample,
  // wire
  PayloadOutOfRange,
  BadHeader,
  BadChecksum,
  UnknownOpcode,
  BadLength,
  IoFailure,
  MalformedRecord,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the library; the code identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  /// For record-level failures: the 1-based line number.
  Error(ErrorCode code, const std::string& what, std::size_t line)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), line_(line) {}

  ErrorCode code() const noexcept { return code_; }
  /// 1-based line of the offending record, 0 when not applicable.
  std::size_t line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::size_t line_ = 0;
};

}  // namespace airguard
