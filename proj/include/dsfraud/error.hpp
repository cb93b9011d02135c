#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dsfraud {

enum class ErrorCode {
  // frames and mass functions
  InvalidFrame,
  ForeignSet,
  DuplicateSet,
  NegativeMass,
  EmptySetMass,
  NotNormalized,
  // combination
  FrameMismatch,
  TotalConflict,
  ModeUnsupported,
  EmptyInput,
  // naive Bayes
  EmptyHistory,
  InvalidHistory,
  DegenerateClass,
  InvalidSmoothing,
  UnknownEvidence,
  NoEvidence,
  ZeroMarginal,
  NonPositiveLikelihood,
  // scoring
  InvalidRule,
  DuplicateRule,
  InvalidThreshold,
  UnknownRule,
  DuplicateTrigger,
  // file formats
  ParseError,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidFrame: return "InvalidFrame";
    case ErrorCode::ForeignSet: return "ForeignSet";
    case ErrorCode::DuplicateSet: return "DuplicateSet";
    case ErrorCode::NegativeMass: return "NegativeMass";
    case ErrorCode::EmptySetMass: return "EmptySetMass";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::FrameMismatch: return "FrameMismatch";
    case ErrorCode::TotalConflict: return "TotalConflict";
    case ErrorCode::ModeUnsupported: return "ModeUnsupported";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyHistory: return "EmptyHistory";
    case ErrorCode::InvalidHistory: return "InvalidHistory";
    case ErrorCode::DegenerateClass: return "DegenerateClass";
    case ErrorCode::InvalidSmoothing: return "InvalidSmoothing";
    case ErrorCode::UnknownEvidence: return "UnknownEvidence";
    case ErrorCode::NoEvidence: return "NoEvidence";
    case ErrorCode::ZeroMarginal: return "ZeroMarginal";
    case ErrorCode::NonPositiveLikelihood: return "NonPositiveLikelihood";
    case ErrorCode::InvalidRule: return "InvalidRule";
    case ErrorCode::DuplicateRule: return "DuplicateRule";
    case ErrorCode::InvalidThreshold: return "InvalidThreshold";
    case ErrorCode::UnknownRule: return "UnknownRule";
    case ErrorCode::DuplicateTrigger: return "DuplicateTrigger";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// All library failures are reported as an Error carrying a machine-readable
/// code; what() holds a human-readable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dsfraud
