#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bbnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// Invalid argument value (frequencies, indices, rates, sizes).
class ParameterError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "parameter"; }
};

/// Input data violates a validation rule (e.g. non-finite samples).
class InputError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "input"; }
};

/// A quantity is undefined for the given signal (constant channel, zero variance).
class DegenerateSignalError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "degenerate-signal"; }
};

class DegenerateGraphError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "degenerate-graph"; }
};

class ShapeError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "shape"; }
};

class UsageError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "usage"; }
};

/// Training diverged or could not proceed.
class TrainingError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "training"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

/// Malformed binary container. Carries the byte offset of the offending field.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }
  const char* kind() const noexcept override { return "format"; }

 private:
  std::uint64_t offset_;
};

}  // namespace bbnet
