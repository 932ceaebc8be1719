#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace newslean {

enum class ErrorCode {
  MalformedRecord,
  DuplicateId,
  UnknownLabel,
  UnknownParty,
  TooFewDomains,
  EmptyCorpus,
  CacheMiss,
  NetworkError,
  DimensionMismatch,
  BetaOutOfRange,
  BackboneLoadError,
  ResourceMissing,
  NonFiniteLoss,
  EmptyTestSet,
  InvalidArgument,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::UnknownParty: return "UnknownParty";
    case ErrorCode::TooFewDomains: return "TooFewDomains";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::CacheMiss: return "CacheMiss";
    case ErrorCode::NetworkError: return "NetworkError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BetaOutOfRange: return "BetaOutOfRange";
    case ErrorCode::BackboneLoadError: return "BackboneLoadError";
    case ErrorCode::ResourceMissing: return "ResourceMissing";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::EmptyTestSet: return "EmptyTestSet";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require_dims(std::size_t got, std::size_t want,
                         std::string_view what) {
  if (got != want) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + ": expected " + std::to_string(want) +
                    ", got " + std::to_string(got));
  }
}

}  // namespace newslean
