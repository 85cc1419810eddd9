// scd/error.cc

#include "scd/error.h"

namespace scd {

const char *ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kCorruptHeader: return "CorruptHeader";
    case ErrorCode::kEmptyAudio: return "EmptyAudio";
    case ErrorCode::kSampleRateMismatch: return "SampleRateMismatch";
    case ErrorCode::kClipTooShort: return "ClipTooShort";
    case ErrorCode::kTooFewValues: return "TooFewValues";
    case ErrorCode::kMaskMismatch: return "MaskMismatch";
    case ErrorCode::kTooFewFrames: return "TooFewFrames";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kEmptySpeaker: return "EmptySpeaker";
    case ErrorCode::kDivergedCost: return "DivergedCost";
    case ErrorCode::kTooShortForIntervals: return "TooShortForIntervals";
    case ErrorCode::kEmptyInterval: return "EmptyInterval";
    case ErrorCode::kClassEmpty: return "ClassEmpty";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kMissingManifest: return "MissingManifest";
    case ErrorCode::kSpeakerTooShort: return "SpeakerTooShort";
    case ErrorCode::kTooManySpeakers: return "TooManySpeakers";
    case ErrorCode::kFingerprintMismatch: return "FingerprintMismatch";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string &message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code),
      detail_(message) {}

}  // namespace scd
