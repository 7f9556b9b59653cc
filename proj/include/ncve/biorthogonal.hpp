#pragma once

#include <vector>

#include "ncve/gramian.hpp"

namespace ncve {

// Real exponential family {exp(-lambda_n t)} on [0, horizon], exponents
// strictly increasing and nonnegative.
struct ExponentialFamily {
  Eigen::VectorXd exponents;
  double horizon = 0.0;
};

void validate(const ExponentialFamily& fam);

// Two interleaved quadratic branches lambda = k^2 - 1 + offset_i, the mode
// exponents of the coupled parabolic pair. Gaps grow linearly in k, so the
// reciprocal sum converges and minimal biorthogonal members exist at every
// horizon.
ExponentialFamily interleaved_family(double mu, int count, double horizon);

struct BiorthogonalFamily {
  ExponentialFamily family;
  std::vector<ControlSignal> members;  // Psi_m, one per exponent
  Eigen::VectorXd norms;               // L2 norms of the members
  double residual = 0.0;               // max |<Psi_m, Phi_n> - delta_mn|
  double gram_cond = 0.0;
  int gram_rank = 0;
};

// Minimal-norm biorthogonal family: Psi_m in span{Phi_n} with
// <Psi_m, Phi_n> = delta_mn. Throws IllConditioned when the Gram rank
// collapses below the family size at the given tolerance.
BiorthogonalFamily min_norm_biorthogonal(const ExponentialFamily& fam,
                                         double rank_tol = 1e-12);

// Unit-cell signal repeated over N integer cells: value at t is
// unit_cell(t - floor(t)) for t in [0, N).
struct PiecewiseSignal {
  ControlSignal unit_cell;
  int cells = 1;

  Complex evaluate(double t) const;
  double l2_norm_sq() const;
  Complex integral() const;
  // integral over [0, cells] of exp(-mu t) * value(t) dt
  Complex moment(Complex mu) const;
};

// Periodic extension of the zero-exponent member across N cells. Requires
// the family to start at exponent zero and psi1_unit to be the unit-cell
// member: horizon 1, unit integral, orthogonal to the other exponentials.
PiecewiseSignal periodic_extension(const ControlSignal& psi1_unit, int cells,
                                   const ExponentialFamily& fam);

struct SeriesSolution {
  bool has_head = false;
  PiecewiseSignal head;     // alpha-weighted periodic member, when present
  Complex alpha = 0.0;
  ControlSignal tail;       // biorthogonal combination of the other modes
  double energy = 0.0;      // squared L2 norm of the assembled control
  double norm = 0.0;
  Eigen::VectorXd moment_residuals;
  double truncation_tail = 0.0;  // geometric estimate of the dropped mass
};

// Null control through the biorthogonal series. The zero-exponent moment,
// when excited, is carried by the periodically extended first member, which
// needs an integer horizon; everything else rides the horizon-T family.
SeriesSolution moment_series_solution(const ModalSystem& sys,
                                      const StateVector& y0, double T);

}  // namespace ncve
