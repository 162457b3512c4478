#pragma once

#include <stdexcept>
#include <string>

namespace mugmatch {

/* Every failure the library reports deliberately carries one of these codes so
 * callers can branch on the condition instead of parsing message text. */
enum class ErrorCode {
  InvalidArgument,
  UnsupportedFormat,
  CorruptFile,
  ZeroDimension,
  NonPositiveSigma,
  TooSmall,
  ImageTooSmall,
  TooFewImages,
  DimensionMismatch,
  KOutOfRange,
  EmptyGallery,
  EmptyFeatureSet,
  DuplicateIdentity,
  UnknownIdentity,
  IoError,
  FormatError,
  ParamsMismatch,
  StaleEigenModel,
  SpecOutOfRange,
  EmptyOutcomes,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace mugmatch
