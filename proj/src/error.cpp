#include "mosaikit/error.hpp"

namespace mosaikit {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateQuad: return "DegenerateQuad";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::SingularResult: return "SingularResult";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::PointAtInfinity: return "PointAtInfinity";
    case ErrorCode::ReflectionDetected: return "ReflectionDetected";
    case ErrorCode::NearSingular: return "NearSingular";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::FrameTooSmall: return "FrameTooSmall";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::InsufficientFeatures: return "InsufficientFeatures";
    case ErrorCode::MissingPrediction: return "MissingPrediction";
    case ErrorCode::TooFewValid: return "TooFewValid";
    case ErrorCode::TextureTooSmall: return "TextureTooSmall";
    case ErrorCode::MaskOutsideFrame: return "MaskOutsideFrame";
    case ErrorCode::CanvasCapExceeded: return "CanvasCapExceeded";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyOverlap: return "EmptyOverlap";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MalformedFile: return "MalformedFile";
  }
  return "UnknownError";
}

}  // namespace mosaikit
