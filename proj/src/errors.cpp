#include "tio/errors.hpp"

namespace tio {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedManifest: return "MalformedManifest";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::EmptyGraph: return "EmptyGraph";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyEdgeSet: return "EmptyEdgeSet";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::InsufficientClasses: return "InsufficientClasses";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::DegenerateClasses: return "DegenerateClasses";
    case ErrorCode::NoRelevantItems: return "NoRelevantItems";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedCheckpoint: return "MalformedCheckpoint";
  }
  return "Unknown";
}

}  // namespace tio
