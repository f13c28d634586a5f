#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace blink {

enum class ErrorCode {
  kMalformedHeader,
  kMalformedBody,
  kEmptyCandidateSet,
  kNoTriggerEdge,
  kTriggerNotScalar,
  kResolutionTooCoarse,
  kNonUniformSampling,
  kMissingColumn,
  kSupplyBelowDrop,
  kNoTriggerCrossing,
  kTraceTooShort,
  kWindowCountMismatch,
  kResolutionMismatch,
  kTooFewRows,
  kDegenerateDesign,
  kFeatureMismatch,
  kWeightOverflow,
  kUnresolvableTap,
  kParamOutOfRange,
  kInvalidArgument,
  kBadFormat,
  kConfig,
  kMissingInput,
  kIo,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base of every error raised by the library. The code identifies the
/// failure class; the message carries the details for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class MalformedHeader : public Error {
 public:
  MalformedHeader(std::string token, const std::string& message);

  /// The header token that caused the failure.
  const std::string& token() const noexcept { return token_; }

 private:
  std::string token_;
};

class MalformedBody : public Error {
 public:
  MalformedBody(std::uint64_t offset, const std::string& message);

  /// Byte offset into the VCD stream where the bad token starts.
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class WindowCountMismatch : public Error {
 public:
  WindowCountMismatch(std::size_t activity_windows, std::size_t power_windows);

  std::size_t activity_windows() const noexcept { return activity_windows_; }
  std::size_t power_windows() const noexcept { return power_windows_; }

 private:
  std::size_t activity_windows_;
  std::size_t power_windows_;
};

class TraceTooShort : public Error {
 public:
  TraceTooShort(std::size_t expected_windows, std::size_t coverable_windows);

  std::size_t expected_windows() const noexcept { return expected_windows_; }
  std::size_t coverable_windows() const noexcept { return coverable_windows_; }

 private:
  std::size_t expected_windows_;
  std::size_t coverable_windows_;
};

}  // namespace blink
