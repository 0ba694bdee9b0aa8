#include "provisim/error.hpp"

namespace provisim {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kUnreadable: return "unreadable";
    case ErrorCode::kUnsupportedFormat: return "unsupported_format";
    case ErrorCode::kDimensionOverflow: return "dimension_overflow";
    case ErrorCode::kCorruptData: return "corrupt_data";
    case ErrorCode::kUnwritable: return "unwritable";
    case ErrorCode::kMalformedLandmarks: return "malformed_landmarks";
    case ErrorCode::kLandmarkIndexOutOfRange: return "landmark_index_out_of_range";
    case ErrorCode::kLandmarkCoordinateRange: return "landmark_coordinate_range";
    case ErrorCode::kMissingContour: return "missing_contour";
    case ErrorCode::kUnknownContour: return "unknown_contour";
    case ErrorCode::kInvalidConfig: return "invalid_config";
    case ErrorCode::kMissingLandmarks: return "missing_landmarks";
    case ErrorCode::kUnknownPlan: return "unknown_plan";
    case ErrorCode::kUnknownSession: return "unknown_session";
    case ErrorCode::kInsufficientStimuli: return "insufficient_stimuli";
    case ErrorCode::kSessionFinished: return "session_finished";
    case ErrorCode::kSessionUnfinished: return "session_unfinished";
    case ErrorCode::kPreviousUnanswered: return "previous_unanswered";
    case ErrorCode::kNotPresented: return "not_presented";
    case ErrorCode::kOutOfOrder: return "out_of_order";
    case ErrorCode::kDuplicateSubmission: return "duplicate_submission";
    case ErrorCode::kElapsedExceedsLimit: return "elapsed_exceeds_limit";
    case ErrorCode::kInvalidResponse: return "invalid_response";
    case ErrorCode::kIo: return "io_error";
  }
  return "unknown";
}

}  // namespace provisim
