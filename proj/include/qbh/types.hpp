#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace qbh {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

// Lattice offset r in Z^D and crystal momentum k in [-pi, pi)^D.
using Offset = std::vector<int>;
using KVec = std::vector<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double eps = std::numeric_limits<double>::epsilon();

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: parameter domain, malformed files, inconsistent couplings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

// EP or KC hit where a regular spectral point is required.
class SingularPointError : public Error {
 public:
  SingularPointError(const std::string& what, KVec k) : Error(what), k_(std::move(k)) {}
  const KVec& k() const { return k_; }

 private:
  KVec k_;
};

class InstabilityError : public Error {
 public:
  using Error::Error;
};

// Relative thresholds; multiplied by scale = max_k |g(k)|_inf where noted.
struct Tolerances {
  double imag = 1e-9;   // |Im lambda| / scale
  double coll = 1e-8;   // particle-hole eigenvalue distance / scale
  double kc = 1e-8;     // |d1|,|d2|,|d3| / scale at a KC
  double kpr = 1e-6;    // eigenvector coalescence
};

// Eigenvalues of a defective pair are only determined to ~sqrt(eps)*scale,
// so collision and imaginary-part tests never go below this.
inline constexpr double defect_floor = 16.0 * 1.4901161193847656e-08;

inline std::string format_k(const KVec& k) {
  std::string s = "(";
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(k[i]);
  }
  return s + ")";
}

inline double wrap_k(double k) {
  double w = std::remainder(k, 2.0 * pi);
  if (w >= pi) w -= 2.0 * pi;
  return w;
}

}  // namespace qbh
