#pragma once

#include <stdexcept>
#include <string>

namespace hdrec {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: arguments, shapes, domains, file contents. The CLI maps these to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A stack was handed to an operation expecting the other domain tag.
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
 public:
  enum class Kind { Io, MalformedHeader, LengthMismatch, UnknownDomain, InvariantViolation };

  ParseError(Kind kind, const std::string& what) : ValidationError(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Disk/sphere rejection sampling ran out of attempts.
class PlacementError : public ValidationError {
 public:
  PlacementError(int achieved, int requested)
      : ValidationError("disk placement failed: placed " + std::to_string(achieved) + " of " +
                        std::to_string(requested) + " disks"),
        achieved_(achieved) {}
  int achieved() const noexcept { return achieved_; }

 private:
  int achieved_;
};

/// Non-finite values or divergence. The CLI maps these to exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace hdrec
