#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cosco {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents do not agree with what an operation requires.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Operation applied to a tensor of the wrong rank (e.g. backward on a non-scalar).
class RankError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Object used in a state that does not permit the call (missing grads, empty tape).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss or gradient. The optimizer step that raised it has been rolled back.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Train-mode batch norm over fewer than two values per channel.
class DegenerateBatchError : public Error {
 public:
  using Error::Error;
};

/// A class has fewer instances than the requested shot count.
class InsufficientClassSizeError : public Error {
 public:
  InsufficientClassSizeError(const std::string& class_name, std::size_t available, std::size_t k)
      : Error("class '" + class_name + "' has " + std::to_string(available) +
              " instances, fewer than k=" + std::to_string(k)),
        class_name_(class_name) {}

  const std::string& class_name() const noexcept { return class_name_; }

 private:
  std::string class_name_;
};

/// Malformed `.ts` input. `line()` is 1-based; 0 means the error is not tied to a line.
class ParseError : public Error {
 public:
  enum class Kind { kMalformedHeader, kDimensionMismatch, kUnknownClassLabel, kEmptyData, kBadValue, kUnsupported, kIo };

  ParseError(Kind kind, std::size_t line, const std::string& what)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), kind_(kind), line_(line) {}

  Kind kind() const noexcept { return kind_; }
  std::size_t line() const noexcept { return line_; }

 private:
  Kind kind_;
  std::size_t line_;
};

}  // namespace cosco
