#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace docparse {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A numeric argument lies outside the operation's domain.
class DomainError : public Error {
public:
  using Error::Error;
};

/// An invalid or unsatisfiable configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// A label has no token assigned in the label map.
class MappingError : public Error {
public:
  using Error::Error;
};

/// A loss was requested over a batch with no active positions.
class EmptyBatchError : public Error {
public:
  using Error::Error;
};

/// LaTeX normalization failed at a byte offset of the source.
class NormalizationError : public Error {
public:
  NormalizationError(const std::string& what, std::size_t position)
      : Error(what + " at byte " + std::to_string(position)), position_(position) {}

  std::size_t position() const noexcept { return position_; }

private:
  std::size_t position_;
};

/// No tabular environment could be located.
class ExtractionError : public Error {
public:
  using Error::Error;
};

/// A metric was requested under a protocol it does not support.
class ProtocolError : public Error {
public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
  DivergenceError(const std::string& what, long step)
      : Error(what + " at step " + std::to_string(step)), step_(step) {}

  long step() const noexcept { return step_; }

private:
  long step_;
};

}  // namespace docparse
