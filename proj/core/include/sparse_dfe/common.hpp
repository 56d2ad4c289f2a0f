#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace sparse_dfe {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

// Error taxonomy. Every library error derives from Error so callers can catch
// the whole family; the concrete type names the failure class.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand dimensions do not agree (bit count, vector lengths, matrix shapes).
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A parameter combination is invalid before any computation happens.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A linear system that must be solved exactly is numerically singular.
class SingularityError : public Error {
 public:
  using Error::Error;
};

// The exhaustive ML search space exceeds the configured limit.
class SearchSpaceError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace sparse_dfe
