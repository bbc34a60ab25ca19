#pragma once

#include <stdexcept>
#include <string>

namespace triage {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller supplied an argument outside an operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed input text (CSV row, config line, model file).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Input is well formed but structurally inconsistent (column counts, headers).
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Input parses but a value violates a domain invariant (e.g. label not in {-1, +1}).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An SVM with offset was asked to train on a single-class active set.
class DegenerateProblem : public Error {
 public:
  using Error::Error;
};

/// Non-finite input or a numerically meaningless request.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Hard-margin training on data that cannot be separated.
class NonSeparable : public Error {
 public:
  using Error::Error;
};

/// Exhaustive enumeration would exceed its configured cap.
class EnumerationCapExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace triage
