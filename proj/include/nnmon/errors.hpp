#pragma once

#include <stdexcept>
#include <string>

namespace nnmon {

/// Root of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid hyperparameter or argument (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent data (CLI exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class LayerIndexError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class ManagerMismatchError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Mutation attempted on a frozen BDD manager.
class FrozenError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class InputShapeError : public DataError {
 public:
  using DataError::DataError;
};

class WordLengthError : public DataError {
 public:
  using DataError::DataError;
};

class NotADistributionError : public DataError {
 public:
  using DataError::DataError;
};

class InsufficientDataError : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateNeuronError : public DataError {
 public:
  using DataError::DataError;
};

class SingularCovarianceError : public DataError {
 public:
  using DataError::DataError;
};

class ConsistencyError : public DataError {
 public:
  using DataError::DataError;
};

/// Structured-file or binary-format violation; `path()` names the offending field or file.
class FormatError : public DataError {
 public:
  FormatError(std::string path, const std::string& message)
      : DataError(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace nnmon
