#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace ebinlab {

inline constexpr const char* kVersion = "ebinlab 0.1.0";

/// Small dense matrix with a runtime dimension of at most 3 (stack storage).
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, 0, 3, 1>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A tensor that should be positive definite is singular or indefinite.
class DegeneratePointError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Matrix exponential or similar overflowed the scalar range.
class RangeError : public Error {
 public:
  using Error::Error;
};

class ShapeMismatchError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. `offset` is the byte offset reported by the parser, or -1.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, long long offset = -1) : Error(what), offset_(offset) {}
  long long offset() const { return offset_; }

 private:
  long long offset_;
};

/// lower > upper in a distance estimate. Always an implementation defect.
class SoundnessError : public Error {
 public:
  using Error::Error;
};

/// Numerical thresholds shared by every module.
struct Tolerances {
  double eps_pd = 1e-10;   // strict positivity of lambda_min
  double eps_psd = 1e-8;   // admissible negative eigenvalue for semidefinite input
  double eps_lin = 1e-10;  // linear-algebra identities (det vs eigenvalue product)
};

}  // namespace ebinlab
