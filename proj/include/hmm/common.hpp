#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <numbers>
#include <stdexcept>
#include <string>

namespace hmm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPiOver3 = 2.0 * std::numbers::pi / 3.0;

// Malformed or inconsistent case/scenario input.
class CaseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid combination of run settings.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A solver could not continue. Carries the simulation time and a snapshot of
// the state when one was available.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double time, Vector snapshot = {})
      : std::runtime_error(what), time_(time), snapshot_(std::move(snapshot)) {}
  double time() const { return time_; }
  const Vector& snapshot() const { return snapshot_; }

 private:
  double time_;
  Vector snapshot_;
};

class StiffFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class MacroDivergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InitializationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace hmm
