#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bevtraj {

enum class ErrorCode {
  InfeasibleParams,
  EmptySamplingRegion,
  MissingColorAssignment,
  AllPixelsMasked,
  TrackTooShort,
  EmptyBinSpec,
  EmptySampleSet,
  EmptyCorpus,
  InvalidScene,
  InvalidConfig,
  Io,
};

inline std::string_view to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::InfeasibleParams: return "InfeasibleParams";
    case ErrorCode::EmptySamplingRegion: return "EmptySamplingRegion";
    case ErrorCode::MissingColorAssignment: return "MissingColorAssignment";
    case ErrorCode::AllPixelsMasked: return "AllPixelsMasked";
    case ErrorCode::TrackTooShort: return "TrackTooShort";
    case ErrorCode::EmptyBinSpec: return "EmptyBinSpec";
    case ErrorCode::EmptySampleSet: return "EmptySampleSet";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::InvalidScene: return "InvalidScene";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bevtraj
