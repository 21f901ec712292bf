#pragma once

#include <stdexcept>
#include <string>

namespace laconv {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class InvalidArgumentError : public Error {
public:
  using Error::Error;
};

/// Tensor/matrix shape incompatibility.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// A matrix inversion hit the singularity threshold. Carries the
/// condition-number estimate at the point of failure and, when the matrix
/// came from a per-sample evaluation, the offending sample index (-1 otherwise).
class SingularityError : public Error {
public:
  SingularityError(const std::string& msg, double condition, int sample_index = -1)
      : Error(msg), condition_(condition), sample_index_(sample_index) {}
  double condition() const { return condition_; }
  int sample_index() const { return sample_index_; }

private:
  double condition_;
  int sample_index_;
};

/// Logarithm requested at the branch cut (rotation angle of +-pi).
class BranchCutError : public Error {
public:
  using Error::Error;
};

class FormatError : public Error {
public:
  using Error::Error;
};

class LengthError : public Error {
public:
  using Error::Error;
};

class ConsistencyError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

/// Training loss became non-finite. Carries the epoch index.
class DivergenceError : public Error {
public:
  DivergenceError(const std::string& msg, int epoch) : Error(msg), epoch_(epoch) {}
  int epoch() const { return epoch_; }

private:
  int epoch_;
};

/// An iteration failed to converge. Carries the last observed gap.
class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string& msg, double last_gap)
      : Error(msg), last_gap_(last_gap) {}
  double last_gap() const { return last_gap_; }

private:
  double last_gap_;
};

/// A model head has no group action defined on its input or output space.
class UnsupportedActionError : public Error {
public:
  using Error::Error;
};

class NumericalError : public Error {
public:
  using Error::Error;
};

}  // namespace laconv
