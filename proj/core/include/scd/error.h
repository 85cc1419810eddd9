// scd/error.h
//
// Error type shared by every module. Operations throw scd::Error carrying a
// machine-readable code; the CLI maps codes to process exit statuses.

#ifndef SCD_ERROR_H_
#define SCD_ERROR_H_

#include <stdexcept>
#include <string>

namespace scd {

enum class ErrorCode {
  kInvalidArgument,
  kIo,
  kUnsupportedFormat,
  kCorruptHeader,
  kEmptyAudio,
  kSampleRateMismatch,
  kClipTooShort,
  kTooFewValues,
  kMaskMismatch,
  kTooFewFrames,
  kDimensionMismatch,
  kEmptySpeaker,
  kDivergedCost,
  kTooShortForIntervals,
  kEmptyInterval,
  kClassEmpty,
  kLengthMismatch,
  kMissingManifest,
  kSpeakerTooShort,
  kTooManySpeakers,
  kFingerprintMismatch,
  kInvalidConfig,
};

const char *ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &message);

  ErrorCode code() const { return code_; }
  /// The message without the code name prefix.
  const std::string &detail() const { return detail_; }
  /// Same code, message prefixed with `context` (typically a file name).
  Error WithContext(const std::string &context) const {
    return Error(code_, context + ": " + detail_);
  }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace scd

#endif  // SCD_ERROR_H_
