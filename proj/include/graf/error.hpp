#pragma once

#include <stdexcept>
#include <string>

namespace graf {

/// Coarse failure category. The CLI maps categories onto process exit codes.
enum class ErrorKind {
  Usage,     // misuse of an API (wrong tape, missing gradient, ...)
  Shape,     // tensor dimension disagreement
  Index,     // id out of range
  Parameter, // invalid numeric argument
  Config,    // experiment configuration
  Data,      // dataset loading, composition, splitting, consistency
  Training,  // divergence or other failure while fitting a model
  Io,        // unwritable output
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct UsageError : Error {
  explicit UsageError(const std::string& w) : Error(ErrorKind::Usage, w) {}
};
struct ShapeError : Error {
  explicit ShapeError(const std::string& w) : Error(ErrorKind::Shape, w) {}
};
struct IndexError : Error {
  explicit IndexError(const std::string& w) : Error(ErrorKind::Index, w) {}
};
struct ParameterError : Error {
  explicit ParameterError(const std::string& w) : Error(ErrorKind::Parameter, w) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::Config, w) {}
};
struct TrainingError : Error {
  explicit TrainingError(const std::string& w) : Error(ErrorKind::Training, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorKind::Io, w) {}
};

/// Invalid arguments to an evaluation routine (length mismatch, k > n, ...).
struct InputError : Error {
  explicit InputError(const std::string& w) : Error(ErrorKind::Usage, w) {}
};

/// Empty mask or empty prediction set.
struct EvaluationError : Error {
  explicit EvaluationError(const std::string& w) : Error(ErrorKind::Usage, w) {}
};

struct CompositionError : Error {
  explicit CompositionError(const std::string& w) : Error(ErrorKind::Data, w) {}
};
struct SplitError : Error {
  explicit SplitError(const std::string& w) : Error(ErrorKind::Data, w) {}
};
struct ConsistencyError : Error {
  explicit ConsistencyError(const std::string& w) : Error(ErrorKind::Data, w) {}
};
struct NormalizationError : Error {
  explicit NormalizationError(const std::string& w) : Error(ErrorKind::Data, w) {}
};

/// Raised when a code path touches labels of a sealed split.
struct HygieneError : Error {
  explicit HygieneError(const std::string& w) : Error(ErrorKind::Usage, w) {}
};

enum class LoadErrorKind { MissingFile, RaggedFeatures, LabelOutOfRange, EdgeOutOfRange, Malformed };

class LoadError : public Error {
 public:
  LoadError(LoadErrorKind k, const std::string& w) : Error(ErrorKind::Data, w), load_kind_(k) {}
  LoadErrorKind load_kind() const noexcept { return load_kind_; }

 private:
  LoadErrorKind load_kind_;
};

/// Process exit code for an error category: 2 config, 3 data, 4 training, 1 otherwise.
inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Data: return 3;
    case ErrorKind::Training: return 4;
    default: return 1;
  }
}

}  // namespace graf
