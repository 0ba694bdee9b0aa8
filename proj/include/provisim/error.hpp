#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace provisim {

enum class ErrorCode {
  kInvalidArgument,
  // image files
  kUnreadable,
  kUnsupportedFormat,
  kDimensionOverflow,
  kCorruptData,
  kUnwritable,
  // landmark files
  kMalformedLandmarks,
  kLandmarkIndexOutOfRange,
  kLandmarkCoordinateRange,
  kMissingContour,
  kUnknownContour,
  // pipeline
  kInvalidConfig,
  kMissingLandmarks,
  // trial protocol
  kUnknownPlan,
  kUnknownSession,
  kInsufficientStimuli,
  kSessionFinished,
  kSessionUnfinished,
  kPreviousUnanswered,
  kNotPresented,
  kOutOfOrder,
  kDuplicateSubmission,
  kElapsedExceedsLimit,
  kInvalidResponse,
  kIo,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library carries a distinct code so callers
// (CLI exit codes, HTTP status mapping, tests) can branch without string
// matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace provisim
