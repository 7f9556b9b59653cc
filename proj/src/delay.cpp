#include "ncve/delay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ncve {
namespace {

constexpr double kPi = 3.14159265358979323846;

// internal signal: boundary phase tracking gave up (root on or near the
// contour, or the winding total is not an integer)
struct PhaseFail {};

Complex det_checked(const DelaySystem& sys, Complex lambda) {
  const Complex d = char_det(sys, lambda);
  if (!is_finite(d)) {
    std::ostringstream os;
    os << "characteristic determinant overflowed at lambda = " << lambda;
    throw NonFiniteEntry(os.str());
  }
  return d;
}

// Local rotation rate |d/ds arg det| <= |det'/det| at a sample point.
double phase_rate(const DelaySystem& sys, Complex p, Complex zp) {
  const double mag = std::abs(zp);
  if (mag < 1e-300) return std::numeric_limits<double>::infinity();
  const Complex dp = char_det_derivative(sys, p);
  if (!is_finite(dp)) return std::numeric_limits<double>::infinity();
  return std::abs(dp) / mag;
}

double edge_phase(const DelaySystem& sys, Complex a, Complex za, Complex b,
                  Complex zb, int depth) {
  if (std::abs(za) < 1e-300 || std::abs(zb) < 1e-300) throw PhaseFail{};
  const double step = std::arg(zb / za);
  const Complex mid = 0.5 * (a + b);
  const Complex zm = det_checked(sys, mid);
  if (std::abs(zm) < 1e-300) throw PhaseFail{};
  // The principal value can hide a full turn when the segment passes close
  // to a root. Accept a step only when the midpoint halves recompose it and
  // the sampled rotation rate rules out an extra turn over this length.
  const double s1 = std::arg(zm / za);
  const double s2 = std::arg(zb / zm);
  if (std::abs(step) < kPi / 2 && std::abs(s1) < kPi / 2 &&
      std::abs(s2) < kPi / 2 && std::abs(s1 + s2 - step) < 1e-6) {
    const double rate =
        std::max({phase_rate(sys, a, za), phase_rate(sys, mid, zm),
                  phase_rate(sys, b, zb)});
    if (std::abs(b - a) * rate < 1.5) return s1 + s2;
  }
  if (depth <= 0) throw PhaseFail{};
  return edge_phase(sys, a, za, mid, zm, depth - 1) +
         edge_phase(sys, mid, zm, b, zb, depth - 1);
}

// Argument increment of char_det along [a, b]. Pre-splits so the fastest
// exponential term cannot alias a full turn between samples, then refines
// adaptively until every step rotates by less than pi/2.
double traced_edge(const DelaySystem& sys, Complex a, Complex b) {
  const int n = sys.dimension();
  const int delays = int(sys.A.size()) - 1;
  const double h = kPi / (2.0 * n * (1.0 + delays * sys.tau));
  const int pieces = std::max(1, int(std::ceil(std::abs(b - a) / h)));
  double total = 0.0;
  Complex prev = a;
  Complex zprev = det_checked(sys, a);
  for (int i = 1; i <= pieces; ++i) {
    const Complex cur = a + (b - a) * (double(i) / pieces);
    const Complex zcur = det_checked(sys, cur);
    total += edge_phase(sys, prev, zprev, cur, zcur, 48);
    prev = cur;
    zprev = zcur;
  }
  return total;
}

struct Rect {
  double re0, re1, im0, im1;

  double width() const { return re1 - re0; }
  double height() const { return im1 - im0; }
  double diam() const { return std::hypot(width(), height()); }
  Complex center() const {
    return {0.5 * (re0 + re1), 0.5 * (im0 + im1)};
  }
  bool contains(Complex z, double pad) const {
    return z.real() >= re0 - pad && z.real() <= re1 + pad &&
           z.imag() >= im0 - pad && z.imag() <= im1 + pad;
  }
};

long rect_winding(const DelaySystem& sys, const Rect& r, double tol) {
  const Complex c1(r.re0, r.im0), c2(r.re1, r.im0);
  const Complex c3(r.re1, r.im1), c4(r.re0, r.im1);
  const double total = traced_edge(sys, c1, c2) + traced_edge(sys, c2, c3) +
                       traced_edge(sys, c3, c4) + traced_edge(sys, c4, c1);
  const double w = total / (2 * kPi);
  const double rounded = std::round(w);
  if (std::abs(w - rounded) > tol || rounded < -0.5) throw PhaseFail{};
  return long(rounded);
}

double residual_gate(Complex z, int n) {
  return 1e-9 * std::pow(1.0 + std::abs(z), n);
}

struct Refined {
  Complex z;
  double residual = 0.0;
  bool ok = false;
};

Refined newton_refine(const DelaySystem& sys, Complex start, int mult) {
  const int n = sys.dimension();
  Complex z = start;
  Complex best = start;
  double best_res = std::abs(char_det(sys, start));
  for (int it = 0; it < 80; ++it) {
    const Complex d = char_det(sys, z);
    const double res = std::abs(d);
    if (!std::isfinite(res)) break;
    if (res < best_res) {
      best = z;
      best_res = res;
    }
    const Complex dp = char_det_derivative(sys, z);
    if (!is_finite(dp) || dp == Complex(0.0, 0.0)) break;
    const Complex step = double(mult) * d / dp;
    if (!is_finite(step)) break;
    z -= step;
    if (!is_finite(z)) break;
    // Exit only after stepping; a start one step short of an exact multiple
    // root already clears the residual bar, and the step still improves it.
    if (res <= 1e-14 * std::pow(1.0 + std::abs(z), n) ||
        std::abs(step) <= 1e-15 * (1.0 + std::abs(z))) {
      const double final_res = std::abs(char_det(sys, z));
      if (final_res < best_res) {
        best = z;
        best_res = final_res;
      }
      break;
    }
  }
  Refined out;
  out.z = best;
  out.residual = best_res;
  out.ok = best_res <= residual_gate(best, n);
  return out;
}

[[noreturn]] void stall(const Rect& r, long w) {
  std::ostringstream os;
  os << "root refinement stalled in [" << r.re0 << ", " << r.re1 << "] x ["
     << r.im0 << ", " << r.im1 << "] holding " << w << " root(s)";
  throw NonConvergent(os.str());
}

struct Resolver {
  const DelaySystem& sys;
  double winding_tol;
  std::vector<CharacteristicRoot> found;

  void resolve(const Rect& r, long w, int depth) {
    if (w == 0) return;
    if (depth > 64) stall(r, w);
    const Complex c = r.center();
    const double collapse = 1e-7 * (1.0 + std::abs(c));
    if (r.diam() <= collapse) {
      // cannot be split further: either a multiple root or a tight cluster
      const Refined ref = newton_refine(sys, c, int(w));
      if (ref.ok && r.contains(ref.z, 16 * r.diam())) {
        found.push_back({ref.z, ref.residual, int(w)});
        return;
      }
      stall(r, w);
    }
    if (w == 1) {
      const Refined ref = newton_refine(sys, c, 1);
      if (ref.ok && r.contains(ref.z, 1e-9 * (1.0 + std::abs(ref.z)))) {
        found.push_back({ref.z, ref.residual, 1});
        return;
      }
      // Newton escaped the cell or stalled; shrink and retry
    }
    split(r, w, depth);
  }

  void split(const Rect& r, long w, int depth) {
    const bool cut_re = r.width() >= r.height();
    // Cut fractions stay away from simple rationals: a cut through a root at
    // a round coordinate (the origin, say) can track a constant-phase
    // determinant along the cut and silently halve the multiplicity.
    const double shifts[3] = {0.0127183, 0.13459, -0.171862};
    for (double s : shifts) {
      Rect lo = r, hi = r;
      if (cut_re) {
        const double cut = r.re0 + (0.5 + s) * r.width();
        lo.re1 = cut;
        hi.re0 = cut;
      } else {
        const double cut = r.im0 + (0.5 + s) * r.height();
        lo.im1 = cut;
        hi.im0 = cut;
      }
      long wl = 0, wh = 0;
      try {
        wl = rect_winding(sys, lo, winding_tol);
        wh = rect_winding(sys, hi, winding_tol);
      } catch (const PhaseFail&) {
        continue;
      }
      if (wl + wh != w) continue;
      resolve(lo, wl, depth + 1);
      resolve(hi, wh, depth + 1);
      return;
    }
    std::ostringstream os;
    os << "a characteristic root sits on every attempted subdivision cut of ["
       << r.re0 << ", " << r.re1 << "] x [" << r.im0 << ", " << r.im1 << "]";
    throw BoundaryRoot(os.str());
  }
};

}  // namespace

void DelaySystem::validate() const {
  if (A.size() < 2)
    throw std::invalid_argument("delay system needs matrices A_0..A_M with M >= 1");
  const int n = int(A.front().rows());
  if (n < 1) throw std::invalid_argument("state dimension must be >= 1");
  for (const auto& a : A) {
    if (a.rows() != n || a.cols() != n)
      throw std::invalid_argument("all A_k must be n x n");
    if (!a.allFinite()) throw NonFiniteEntry("non-finite entry in an A_k");
  }
  if (B.rows() != n || B.cols() < 1)
    throw std::invalid_argument("B must be n x m with m >= 1");
  if (!B.allFinite()) throw NonFiniteEntry("non-finite entry in B");
  if (!std::isfinite(tau) || tau <= 0.0)
    throw std::invalid_argument("tau must be a positive real");
}

DelaySystem make_scalar_delay(double a, double b, double tau) {
  DelaySystem sys;
  sys.A.resize(2);
  sys.A[0] = Eigen::MatrixXd::Constant(1, 1, -a);
  sys.A[1] = Eigen::MatrixXd::Constant(1, 1, -b);
  sys.B = Eigen::MatrixXd::Constant(1, 1, 1.0);
  sys.tau = tau;
  return sys;
}

void RootSearchRegion::validate() const {
  if (!std::isfinite(re_min) || !std::isfinite(re_max) ||
      !std::isfinite(im_min) || !std::isfinite(im_max))
    throw std::invalid_argument("region bounds must be finite");
  if (re_min >= re_max || im_min >= im_max)
    throw std::invalid_argument("region must have positive extent");
  if (max_roots < 1) throw std::invalid_argument("max_roots must be >= 1");
  if (!(winding_tol > 0)) throw std::invalid_argument("winding_tol must be positive");
}

bool RootSearchRegion::contains(Complex z, double pad) const {
  return z.real() >= re_min - pad && z.real() <= re_max + pad &&
         z.imag() >= im_min - pad && z.imag() <= im_max + pad;
}

Eigen::MatrixXcd char_matrix(const DelaySystem& sys, Complex lambda) {
  const int n = sys.dimension();
  Eigen::MatrixXcd m =
      lambda * Eigen::MatrixXcd::Identity(n, n);
  const Complex decay = std::exp(-lambda * sys.tau);
  Complex power(1.0, 0.0);
  for (const auto& a : sys.A) {
    m -= a.cast<Complex>() * power;
    power *= decay;
  }
  return m;
}

Complex char_det(const DelaySystem& sys, Complex lambda) {
  return char_matrix(sys, lambda).determinant();
}

namespace {

Eigen::MatrixXcd adjugate(const Eigen::MatrixXcd& m) {
  const int n = int(m.rows());
  Eigen::MatrixXcd adj(n, n);
  if (n == 1) {
    adj(0, 0) = Complex(1.0, 0.0);
    return adj;
  }
  Eigen::MatrixXcd sub(n - 1, n - 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int r = 0, rr = 0; r < n; ++r) {
        if (r == i) continue;
        for (int c = 0, cc = 0; c < n; ++c) {
          if (c == j) continue;
          sub(rr, cc) = m(r, c);
          ++cc;
        }
        ++rr;
      }
      const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      adj(j, i) = sign * sub.determinant();
    }
  }
  return adj;
}

}  // namespace

Complex char_det_derivative(const DelaySystem& sys, Complex lambda) {
  const Eigen::MatrixXcd m = char_matrix(sys, lambda);
  const int n = int(m.rows());
  // d/dlambda det M = tr(adj(M) M'); the adjugate stays finite at roots,
  // where an inverse-based formula would break down
  Eigen::MatrixXcd mprime = Eigen::MatrixXcd::Identity(n, n);
  const Complex decay = std::exp(-lambda * sys.tau);
  Complex power = decay;
  for (size_t k = 1; k < sys.A.size(); ++k) {
    mprime += (double(k) * sys.tau) * sys.A[k].cast<Complex>() * power;
    power *= decay;
  }
  return (adjugate(m) * mprime).trace();
}

long winding_count(const DelaySystem& sys, const RootSearchRegion& region) {
  sys.validate();
  region.validate();
  const Rect r{region.re_min, region.re_max, region.im_min, region.im_max};
  try {
    return rect_winding(sys, r, region.winding_tol);
  } catch (const PhaseFail&) {
    throw BoundaryRoot(
        "cannot track the boundary phase; a characteristic root lies on or "
        "hugs the rectangle boundary");
  }
}

std::vector<CharacteristicRoot> find_roots(const DelaySystem& sys,
                                           const RootSearchRegion& region) {
  sys.validate();
  region.validate();
  Rect r{region.re_min, region.re_max, region.im_min, region.im_max};
  long total = 0;
  bool counted = false;
  const double grow[2] = {1e-6, 3.7e-6};
  for (int attempt = 0; attempt <= 2 && !counted; ++attempt) {
    try {
      total = rect_winding(sys, r, region.winding_tol);
      counted = true;
    } catch (const PhaseFail&) {
      if (attempt == 2) break;
      const double e = grow[attempt];
      r = Rect{region.re_min - e, region.re_max + e, region.im_min - e,
               region.im_max + e};
    }
  }
  if (!counted)
    throw BoundaryRoot(
        "a characteristic root sits on the search boundary even after "
        "perturbing the rectangle");
  if (total == 0) return {};
  if (total > region.max_roots) {
    std::ostringstream os;
    os << "winding count " << total << " exceeds max_roots "
       << region.max_roots;
    throw NonConvergent(os.str());
  }

  Resolver resolver{sys, region.winding_tol, {}};
  resolver.resolve(r, total, 0);

  auto roots = std::move(resolver.found);
  std::sort(roots.begin(), roots.end(),
            [](const CharacteristicRoot& a, const CharacteristicRoot& b) {
              if (a.lambda.real() != b.lambda.real())
                return a.lambda.real() < b.lambda.real();
              return a.lambda.imag() < b.lambda.imag();
            });
  std::vector<CharacteristicRoot> merged;
  for (const auto& root : roots) {
    if (!merged.empty() &&
        std::abs(root.lambda - merged.back().lambda) <=
            1e-7 * (1.0 + std::abs(root.lambda))) {
      merged.back().multiplicity += root.multiplicity;
      if (root.residual < merged.back().residual) {
        merged.back().lambda = root.lambda;
        merged.back().residual = root.residual;
      }
      continue;
    }
    merged.push_back(root);
  }
  long resolved = 0;
  for (const auto& root : merged) resolved += root.multiplicity;
  if (resolved != total) {
    std::ostringstream os;
    os << "resolved " << resolved << " of " << total << " roots";
    throw NonConvergent(os.str());
  }
  return merged;
}

bool rank_condition(const DelaySystem& sys, Complex lambda) {
  const int n = sys.dimension();
  const int m = sys.input_count();
  Eigen::MatrixXcd wide(n, n + m);
  wide.leftCols(n) = char_matrix(sys, lambda);
  wide.rightCols(m) = sys.B.cast<Complex>();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(wide);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return n == 0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-10 * sv(0)) ++rank;
  return rank == n;
}

double right_half_plane_root_bound(const DelaySystem& sys) {
  double bound = 0.0;
  for (const auto& a : sys.A) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    bound += svd.singularValues()(0);
  }
  return bound;
}

DelayVerdict ncve_verdict(const DelaySystem& sys,
                          std::optional<RootSearchRegion> region,
                          double left_margin) {
  sys.validate();
  if (!(left_margin >= 0.0))
    throw std::invalid_argument("left_margin must be >= 0");

  DelayVerdict verdict;
  verdict.root_bound = right_half_plane_root_bound(sys);

  RootSearchRegion window;
  if (region) {
    window = *region;
    window.validate();
    if (window.re_min > 0.0 || window.re_max < verdict.root_bound ||
        window.im_min > -verdict.root_bound ||
        window.im_max < verdict.root_bound) {
      std::ostringstream os;
      os << "search window does not cover the certified root box [0, "
         << verdict.root_bound << "] x [-" << verdict.root_bound << ", "
         << verdict.root_bound << "]; every right-half-plane root lies there";
      throw InconclusiveWindow(os.str());
    }
  } else {
    window.re_min = -left_margin - 0.1;
    window.re_max = verdict.root_bound + 0.5;
    window.im_min = -verdict.root_bound - 0.5;
    window.im_max = verdict.root_bound + 0.5;
  }
  verdict.region = window;
  verdict.roots = find_roots(sys, window);

  // the rank test only covers roots the window actually sees
  const double margin = std::min(left_margin, -window.re_min);
  int unstable = 0;
  bool rank_ok = true;
  Complex rank_witness;
  for (const auto& root : verdict.roots) {
    if (root.lambda.real() > 1e-9) ++unstable;
    if (root.lambda.real() >= -margin - 1e-12 &&
        !rank_condition(sys, root.lambda)) {
      if (rank_ok) rank_witness = root.lambda;
      rank_ok = false;
    }
  }
  verdict.spectral_ok = unstable == 0;
  verdict.controllable = rank_ok;
  verdict.ncve = verdict.spectral_ok && verdict.controllable;

  std::ostringstream roots_line;
  roots_line << "characteristic roots: " << verdict.roots.size() << " in ["
             << window.re_min << ", " << window.re_max << "] x ["
             << window.im_min << ", " << window.im_max << "], " << unstable
             << " with Re > 0";
  verdict.reasons.push_back(roots_line.str());
  std::ostringstream bound_line;
  bound_line << "any root with Re >= 0 satisfies |lambda| <= sum_k ||A_k||_2 = "
             << verdict.root_bound
             << ", so the window is conclusive for stability";
  verdict.reasons.push_back(bound_line.str());
  std::ostringstream rank_line;
  if (rank_ok) {
    rank_line << "rank [lambda I - sum_k A_k e^(-lambda k tau), B] = "
              << sys.dimension() << " at every root with Re >= " << -margin;
  } else {
    rank_line << "rank condition fails at lambda = " << rank_witness;
  }
  verdict.reasons.push_back(rank_line.str());
  verdict.reasons.push_back(
      std::string("verdict: null controllability with vanishing energy ") +
      (verdict.ncve ? "holds" : "fails"));
  return verdict;
}

RasterScan raster_scan(double a_min, double a_max, double b_min, double b_max,
                       double step, double tau) {
  if (!(step > 0) || a_min > a_max || b_min > b_max)
    throw std::invalid_argument("raster needs a positive step and ordered bounds");
  RasterScan scan;
  const int na = int(std::floor((a_max - a_min) / step + 1e-9)) + 1;
  const int nb = int(std::floor((b_max - b_min) / step + 1e-9)) + 1;
  for (int i = 0; i < na; ++i) scan.a_values.push_back(a_min + i * step);
  for (int j = 0; j < nb; ++j) scan.b_values.push_back(b_min + j * step);
  scan.ncve.reserve(size_t(na) * nb);
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < nb; ++j) {
      const DelaySystem sys =
          make_scalar_delay(scan.a_values[i], scan.b_values[j], tau);
      scan.ncve.push_back(ncve_verdict(sys).ncve ? 1 : 0);
    }
  return scan;
}

}  // namespace ncve
