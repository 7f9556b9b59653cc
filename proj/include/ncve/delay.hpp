#pragma once
// Root location and NCVE verdicts for retarded systems
//     x'(t) = A_0 x(t) + A_1 x(t - tau) + ... + A_M x(t - M tau) + B u(t).
// The generator's spectrum is the zero set of the entire function
// det[lambda I - sum_k A_k e^{-lambda k tau}]; roots are located by
// argument-principle counting on rectangles plus Newton refinement.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "ncve/parabolic.hpp"
#include "ncve/types.hpp"

namespace ncve {

struct DelaySystem {
  std::vector<Eigen::MatrixXd> A;  // A[0..M], each n x n; M = A.size() - 1 >= 1
  Eigen::MatrixXd B;               // n x m
  double tau = 1.0;

  int dimension() const { return A.empty() ? 0 : int(A.front().rows()); }
  int input_count() const { return int(B.cols()); }
  void validate() const;
};

// x' = -a x(t) - b x(t - tau) + u
DelaySystem make_scalar_delay(double a, double b, double tau);

struct RootSearchRegion {
  double re_min = -1.0;
  double re_max = 1.0;
  double im_min = -1.0;
  double im_max = 1.0;
  int max_roots = 512;
  double winding_tol = 1e-6;  // |winding - nearest integer| must stay below this

  void validate() const;
  bool contains(Complex z, double pad = 0.0) const;
};

struct CharacteristicRoot {
  Complex lambda;
  double residual = 0.0;  // |det| at lambda
  int multiplicity = 1;
};

Eigen::MatrixXcd char_matrix(const DelaySystem& sys, Complex lambda);
Complex char_det(const DelaySystem& sys, Complex lambda);
Complex char_det_derivative(const DelaySystem& sys, Complex lambda);

// Number of roots (with multiplicity) strictly inside the rectangle, from the
// boundary phase increment of char_det. Throws BoundaryRoot when the phase
// cannot be tracked, which happens when a root sits on or hugs the boundary.
long winding_count(const DelaySystem& sys, const RootSearchRegion& region);

// All roots inside the region, each refined until |det| < 1e-9 (1+|lambda|)^n,
// sorted by (Re, Im). The rectangle is recursively split until every piece
// holds at most one root; the returned multiplicities sum to the winding
// count of the whole region. BoundaryRoot after two failed boundary
// perturbations, NonConvergent when refinement stalls.
std::vector<CharacteristicRoot> find_roots(const DelaySystem& sys,
                                           const RootSearchRegion& region);

// rank [lambda I - sum A_k e^{-lambda k tau}, B] == n, singular values with a
// 1e-10 relative threshold.
bool rank_condition(const DelaySystem& sys, Complex lambda);

// Any root with Re lambda >= 0 satisfies |lambda| <= sum_k ||A_k||_2, because
// |e^{-lambda k tau}| <= 1 there. This makes a finite window conclusive.
double right_half_plane_root_bound(const DelaySystem& sys);

struct DelayVerdict : NcveVerdict {
  double root_bound = 0.0;
  RootSearchRegion region;
  std::vector<CharacteristicRoot> roots;
};

// NCVE holds iff no root lies in the open right half-plane and the rank
// condition passes at every root with Re >= -left_margin. A caller-supplied
// region must cover [0, bound] x [-bound, bound] for the certified bound,
// otherwise InconclusiveWindow.
DelayVerdict ncve_verdict(const DelaySystem& sys,
                          std::optional<RootSearchRegion> region = std::nullopt,
                          double left_margin = 0.5);

struct RasterScan {
  std::vector<double> a_values;
  std::vector<double> b_values;
  std::vector<std::uint8_t> ncve;  // row-major, rows indexed by a

  std::uint8_t at(size_t ia, size_t ib) const {
    return ncve[ia * b_values.size() + ib];
  }
};

// NCVE verdict grid for the scalar family x' = -a x - b x(t - tau) + u.
RasterScan raster_scan(double a_min, double a_max, double b_min, double b_max,
                       double step, double tau);

}  // namespace ncve
