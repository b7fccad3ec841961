#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace polyflow {

enum class ErrorCode {
  DegeneratePoint,
  InvalidSpec,
  DegenerateImmersion,
  DegenerateMetric,
  NotIsometric,
  MetricModeError,
  RadiusTooLarge,
  NotTriharmonic,
  StepUnderflow,
  UnknownExample,
  BadParams,
  ConfigError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegeneratePoint: return "DegeneratePoint";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::DegenerateImmersion: return "DegenerateImmersion";
    case ErrorCode::DegenerateMetric: return "DegenerateMetric";
    case ErrorCode::NotIsometric: return "NotIsometric";
    case ErrorCode::MetricModeError: return "MetricModeError";
    case ErrorCode::RadiusTooLarge: return "RadiusTooLarge";
    case ErrorCode::NotTriharmonic: return "NotTriharmonic";
    case ErrorCode::StepUnderflow: return "StepUnderflow";
    case ErrorCode::UnknownExample: return "UnknownExample";
    case ErrorCode::BadParams: return "BadParams";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace polyflow
