#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace ncve {

using Complex = std::complex<double>;
using StateVector = Eigen::VectorXcd;

// Domain errors. Each names the condition that makes a result meaningless;
// callers that can recover catch the specific type.
struct NonFiniteEntry : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct Infeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UncontrollableMode : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IllConditioned : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PreconditionViolated : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SeriesDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BoundaryRoot : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonConvergent : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InconclusiveWindow : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotDiagonalizable : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotControllable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// exp(w) - 1 without cancellation for small |w|.
// Real part uses expm1 plus the exact identity cos(b) - 1 = -2 sin^2(b/2).
inline Complex cexpm1(Complex w) {
  const double a = w.real();
  const double b = w.imag();
  const double s = std::sin(b / 2);
  return {std::expm1(a) * std::cos(b) - 2 * s * s, std::exp(a) * std::sin(b)};
}

// Integral of exp(-z s) over s in [0, T]. Exact limit T at z = 0.
inline Complex exp_integral(Complex z, double T) {
  if (z == Complex(0.0, 0.0)) return {T, 0.0};
  return -cexpm1(-z * T) / z;
}

inline bool is_finite(Complex z) {
  return std::isfinite(z.real()) && std::isfinite(z.imag());
}

}  // namespace ncve
