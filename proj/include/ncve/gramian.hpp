#pragma once

#include <optional>
#include <vector>

#include "ncve/modal.hpp"

namespace ncve {

// f(t) = sum_n coefficients[n] * conj(exp(-exponents[n] t)) on [0, horizon].
struct ControlSignal {
  Eigen::VectorXcd exponents;
  Eigen::VectorXcd coefficients;
  double horizon = 0.0;

  Complex evaluate(double t) const;
  double l2_norm_sq() const;
  // integral over [0, horizon] of exp(-mu t) f(t) dt
  Complex moment(Complex mu) const;
};

struct GramMatrix {
  Eigen::MatrixXcd entries;
  Eigen::VectorXcd exponents;
  double horizon = 0.0;
  double rank_tol = 1e-12;

  // Singular factors of the diagonally equilibrated matrix
  // D^-1 entries D^-1 with D = diag(sqrt(entries_ii)). Equilibration keeps
  // slow modes resolvable when one exponent inflates the raw entries by
  // exp(|Re lambda| T).
  Eigen::VectorXd row_scale;  // the D diagonal
  Eigen::MatrixXcd u;         // left singular vectors
  Eigen::MatrixXcd v;         // right singular vectors
  Eigen::VectorXd sigma;      // singular values, descending
  int effective_rank = 0;     // count of sigma above rank_tol * sigma_max
  double cond = 0.0;          // of the equilibrated matrix

  // Pseudoinverse apply, truncating singular values below threshold.
  Eigen::VectorXcd pinv_apply(const Eigen::VectorXcd& rhs) const;
  // Re(rhs^H G^+ rhs) assembled directly from the singular factors.
  double pinv_quadratic(const Eigen::VectorXcd& rhs) const;
};

GramMatrix gram_matrix(const Eigen::VectorXcd& exponents, double T,
                       double rank_tol = 1e-12);

struct MomentProblem {
  Eigen::VectorXcd exponents;
  Eigen::VectorXcd targets;
  double horizon = 0.0;
};

struct MomentSolution {
  ControlSignal control;
  double energy = 0.0;            // conj(d)^T G^+ d via the Gram SVD
  double energy_quadratic = 0.0;  // Re(c^H G c), cross-check route
  double residual = 0.0;          // ||G c - d|| in the row-equilibrated metric
  int effective_rank = 0;
  double gram_cond = 0.0;
};

MomentSolution solve_moment_min_norm(const MomentProblem& p,
                                     double rank_tol = 1e-12);

// Moment problem whose solution, read as f(t) = u(T - t), steers every mode
// of y' = diag(lambda) y + coeff u from y0 to zero at time T.
MomentProblem null_steering_problem(const ModalSystem& sys,
                                    const StateVector& y0, double T);

struct RegularizedCheck {
  double omega = 0.0;
  double energy_raw = 0.0;
  double energy_dcoord = 0.0;
  double rel_gap = 0.0;
  bool pass = false;
};

// Solves the null-steering problem twice: directly, and through the
// resolvent coordinates x_n = y_n / (omega - lambda_n) with control
// coefficients scaled the same way. The minimal energies must agree.
RegularizedCheck regularized_equivalence_check(
    const ModalSystem& sys, const StateVector& y0, double T,
    std::optional<double> omega = std::nullopt, double tol = 1e-8);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms = 0.0;
  int points = 0;
};

struct EnergyReport {
  std::vector<double> horizons;
  std::vector<double> energies;   // Z_T(y0)
  std::vector<double> norms;      // sqrt(Z_T)
  std::vector<double> residuals;  // moment residual per horizon
  std::vector<bool> feasible;
  LineFit power;        // log Z against log T
  LineFit exponential;  // log Z against T
};

EnergyReport energy_sweep(const ModalSystem& sys, const StateVector& y0,
                          const std::vector<double>& horizons);

}  // namespace ncve
