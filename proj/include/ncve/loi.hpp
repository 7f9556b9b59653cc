#pragma once
// The minimal steering energy I(y0) of a controllable modal system is a
// Hermitian quadratic form. This module reconstructs its matrix P by complex
// polarization of finite-horizon energies and checks the dissipation
// inequality <P y(t), y(t)> - <P y0, y0> + int_0^t |u|^2 >= 0 along exact
// modal trajectories.

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ncve/gramian.hpp"
#include "ncve/modal.hpp"
#include "ncve/types.hpp"

namespace ncve {

struct QuadraticForm {
  Eigen::MatrixXcd matrix;  // Hermitian, in coordinates of the build basis
  double horizon_used = 0.0;
  int basis_size = 0;
  double hermitian_defect = 0.0;   // max entry of |raw - raw^H| before symmetrizing
  double diag_consistency = 0.0;   // max_i |raw_ii - I(basis_i)|
  double min_eigenvalue = 0.0;

  double value(const StateVector& coords) const;  // Re coords^H P coords
  double norm() const;                            // spectral norm
};

// Minimal L2 energy steering y0 (taken at time start_time) to zero over a
// window of length T. The start_time = 0 case goes through the moment solver;
// a positive start keeps the same exponential family on the shifted clock,
// which is how the time-translation invariance of P gets exercised.
double steering_energy(const ModalSystem& sys, const StateVector& y0, double T,
                       double start_time = 0.0);

// P entries by the four-point complex polarization of I at horizon T_proxy.
// Throws NotControllable when the underlying moment problems cannot steer a
// polarization point.
QuadraticForm build_P(const ModalSystem& sys, double T_proxy,
                      const std::vector<StateVector>& basis,
                      double start_time = 0.0);
QuadraticForm build_P(const ModalSystem& sys, double T_proxy);  // canonical basis

// Z_T has stabilized for every basis vector: Z_{2T}/Z_T > 0.99 or Z_T < 1e-12.
bool proxy_horizon_converged(const ModalSystem& sys,
                             const std::vector<StateVector>& basis, double T);

struct LoiCheckReport {
  std::vector<double> times;
  std::vector<double> values;  // dissipation expression per sample time
  double worst = 0.0;          // minimum over all samples (and trials)
  double tolerance = 0.0;      // pass threshold -1e-9 (1 + ||P|| ||y0||^2)
  bool pass = false;
  int trajectories = 1;
};

// Evaluates the inequality along the closed-form trajectory driven by u from
// y0. P must be in canonical modal coordinates. Every sample time must lie
// within the horizon of u.
LoiCheckReport loi_check(const QuadraticForm& P, const ModalSystem& sys,
                         const StateVector& y0, const ControlSignal& u,
                         const std::vector<double>& times);

// Random initial states and exponential-sum controls with coefficients in the
// unit ball, sampled on the geometric grid {horizon/64, ..., horizon}.
LoiCheckReport loi_random_trials(const QuadraticForm& P, const ModalSystem& sys,
                                 int trials, std::uint64_t seed,
                                 double horizon);

// max over random pairs of |<P y, x>| - sqrt(<P x, x> <P y, y>); for an exact
// positive semidefinite form this is never positive.
double schwarz_slack(const QuadraticForm& P, int pairs, std::uint64_t seed);

struct ConsistencyReport {
  int trials = 0;
  double worst_homogeneity = 0.0;    // relative to I(y)
  double worst_parallelogram = 0.0;  // relative to 2I(x) + 2I(xi)
  bool pass = false;
};

// |I(alpha y) - |alpha|^2 I(y)| <= 1e-8 I(y) and the parallelogram identity
// I(x+xi) + I(x-xi) = 2I(x) + 2I(xi) to 1e-7 relative, over random draws plus
// the alpha = -1, alpha = i, and x = xi special cases.
ConsistencyReport energy_quadratic_consistency(const ModalSystem& sys, double T,
                                               int trials, std::uint64_t seed);

}  // namespace ncve
