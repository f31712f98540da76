#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace csp {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

// Bad input to a public operation (non-finite angle, mismatched dimensions,
// out-of-range probability, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A scenario that cannot be processed as configured, e.g. a second-stage
// covariance that stays singular after diagonal loading.
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Capon denominator vanished for one angle cell.
class DegenerateCell : public std::runtime_error {
 public:
  DegenerateCell(std::size_t cell, const std::string& what)
      : std::runtime_error(what), cell_(cell) {}
  std::size_t cell() const noexcept { return cell_; }

 private:
  std::size_t cell_;
};

// Should not happen for a model built through the public constructors.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline constexpr double kPi = 3.14159265358979323846;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace csp
