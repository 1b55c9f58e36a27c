#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lteval {

/// Machine-readable failure kinds. The CLI reports these names verbatim.
enum class ErrorCode {
  Io,
  MalformedRecord,
  DuplicateItem,
  NonContiguousIndex,
  EmptyText,
  UnknownItem,
  InsufficientParagraphs,
  InsufficientQuestions,
  DanglingAnnotation,
  AnnotationOutOfRange,
  InvalidConfig,
  Transport,
  TransportExhausted,
  EmptyCompletion,
  MockScriptMiss,
  InsufficientShots,
  EmptyCandidate,
  Unparsable,
  OutOfRange,
  NoQuestionsParsed,
  UnmappableCategory,
  UnclassifiedQuestion,
  LengthMismatch,
  TooFewItems,
  EmptyInput,
  InsufficientOverlap,
  UnknownLabel,
  NoCommonItems,
  ScaleViolation,
  TooFewAxes,
  ValueAboveMaximum,
  InsufficientBank,
  EmptyRun,
  MixedFingerprint,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lteval
