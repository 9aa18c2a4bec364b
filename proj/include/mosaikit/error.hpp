#pragma once

#include <stdexcept>
#include <string>

namespace mosaikit {

enum class ErrorCode {
  // geometry
  DegenerateQuad,
  SingularSystem,
  SingularResult,
  SingularMatrix,
  PointAtInfinity,
  ReflectionDetected,
  NearSingular,
  InvalidInput,
  // images / sampling
  OutOfBounds,
  FrameTooSmall,
  SizeMismatch,
  // estimation
  DegenerateInput,
  InsufficientFeatures,
  MissingPrediction,
  TooFewValid,
  // synthesis / compositing
  TextureTooSmall,
  MaskOutsideFrame,
  CanvasCapExceeded,
  // metrics
  LengthMismatch,
  EmptyOverlap,
  // configuration and I/O
  InvalidConfig,
  IoError,
  MalformedFile,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_error(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace mosaikit
