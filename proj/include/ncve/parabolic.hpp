#pragma once

#include <string>
#include <vector>

#include "ncve/gramian.hpp"
#include "ncve/modal.hpp"

namespace ncve {

// Coupled pair of one-dimensional heat equations on (0, pi) with Dirichlet
// ends, zero-order coupling A0 and a scalar control entering through B0
// against the slope of the boundary eigenfunctions. Truncated at the first
// K sine frequencies.
struct ParabolicSystem {
  Eigen::Matrix2d A0;
  Eigen::Vector2d B0;
  int K = 8;
};

struct SpectrumReport {
  Complex mu1, mu2;  // eigenvalues of A0, ordered by descending real part
  bool diagonalizable = false;
  Eigen::Matrix2cd basis;      // eigenvectors as columns, when diagonalizable
  Eigen::Matrix2cd basis_inv;
  std::vector<Complex> eigenvalues;  // mu_i - k^2 in (k, branch) order
};

struct ControllabilityReport {
  bool rank_ok = false;
  double sigma_ratio = 0.0;  // sigma_2 / sigma_1 of [B0, A0 B0]
  bool resonance = false;
  int resonance_j = 0;
  int resonance_k = 0;
  bool controllable = false;
  std::string detail;
};

struct NcveVerdict {
  bool controllable = false;
  bool spectral_ok = false;
  bool ncve = false;
  std::vector<std::string> reasons;
};

SpectrumReport parabolic_spectrum(const ParabolicSystem& ps);

// Kalman rank of [B0, A0 B0] plus the cross-branch resonance scan
// mu1 - mu2 = j^2 - k^2 over integer frequencies.
ControllabilityReport controllability_check(const ParabolicSystem& ps);

NcveVerdict ncve_verdict(const ParabolicSystem& ps);

struct ModalReduction {
  ModalSystem system;  // 2K diagonal modes in (k, branch) order
  SpectrumReport spectrum;
  int K = 0;

  // Sine-expansion initial data of both components to modal coordinates.
  StateVector map_initial(const Eigen::VectorXcd& v0,
                          const Eigen::VectorXcd& w0) const;
};

// Diagonalizes the coupling and lists the 2K modes with their control
// coefficients k * (P^{-1} B0)_i. Throws NotDiagonalizable for defective A0.
ModalReduction to_modal(const ParabolicSystem& ps);

}  // namespace ncve
