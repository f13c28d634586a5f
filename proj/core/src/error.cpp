#include "blink/error.hpp"

#include <fmt/format.h>

namespace blink {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kMalformedHeader: return "MalformedHeader";
    case ErrorCode::kMalformedBody: return "MalformedBody";
    case ErrorCode::kEmptyCandidateSet: return "EmptyCandidateSet";
    case ErrorCode::kNoTriggerEdge: return "NoTriggerEdge";
    case ErrorCode::kTriggerNotScalar: return "TriggerNotScalar";
    case ErrorCode::kResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorCode::kNonUniformSampling: return "NonUniformSampling";
    case ErrorCode::kMissingColumn: return "MissingColumn";
    case ErrorCode::kSupplyBelowDrop: return "SupplyBelowDrop";
    case ErrorCode::kNoTriggerCrossing: return "NoTriggerCrossing";
    case ErrorCode::kTraceTooShort: return "TraceTooShort";
    case ErrorCode::kWindowCountMismatch: return "WindowCountMismatch";
    case ErrorCode::kResolutionMismatch: return "ResolutionMismatch";
    case ErrorCode::kTooFewRows: return "TooFewRows";
    case ErrorCode::kDegenerateDesign: return "DegenerateDesign";
    case ErrorCode::kFeatureMismatch: return "FeatureMismatch";
    case ErrorCode::kWeightOverflow: return "WeightOverflow";
    case ErrorCode::kUnresolvableTap: return "UnresolvableTap";
    case ErrorCode::kParamOutOfRange: return "ParamOutOfRange";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kBadFormat: return "BadFormat";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kMissingInput: return "MissingInput";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

MalformedHeader::MalformedHeader(std::string token, const std::string& message)
    : Error(ErrorCode::kMalformedHeader,
            fmt::format("malformed VCD header at token '{}': {}", token, message)),
      token_(std::move(token)) {}

MalformedBody::MalformedBody(std::uint64_t offset, const std::string& message)
    : Error(ErrorCode::kMalformedBody,
            fmt::format("malformed VCD body at byte {}: {}", offset, message)),
      offset_(offset) {}

WindowCountMismatch::WindowCountMismatch(std::size_t activity_windows,
                                         std::size_t power_windows)
    : Error(ErrorCode::kWindowCountMismatch,
            fmt::format("activity has {} windows but power has {}",
                        activity_windows, power_windows)),
      activity_windows_(activity_windows),
      power_windows_(power_windows) {}

TraceTooShort::TraceTooShort(std::size_t expected_windows,
                             std::size_t coverable_windows)
    : Error(ErrorCode::kTraceTooShort,
            fmt::format("power trace covers only {} of {} expected windows",
                        coverable_windows, expected_windows)),
      expected_windows_(expected_windows),
      coverable_windows_(coverable_windows) {}

}  // namespace blink
