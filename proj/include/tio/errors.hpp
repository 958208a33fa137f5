#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tio {

/// Failure categories surfaced by the library. Every public operation that can
/// fail throws tio::Error carrying one of these codes.
enum class ErrorCode {
  MalformedManifest,
  DimensionMismatch,
  NonFiniteValue,
  DanglingReference,
  IoFailure,
  InvalidSpec,
  EmptyGraph,
  UnknownNode,
  LengthMismatch,
  EmptyEdgeSet,
  ShapeMismatch,
  EmptyBatch,
  NonFiniteGradient,
  InsufficientClasses,
  EmptyGrid,
  DegenerateClasses,
  NoRelevantItems,
  InvalidArgument,
  MalformedCheckpoint,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tio
