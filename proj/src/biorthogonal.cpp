#include "ncve/biorthogonal.hpp"

#include <quadmath.h>

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>

// The Gram matrices of tightly packed exponential ladders reach condition
// numbers around 1e19 for the family sizes the acceptance instances need,
// which is past what double-precision factorization plus refinement can
// certify. The solves in this translation unit therefore run in __float128
// and only the results are rounded to double for the public structs.

namespace ncve {

namespace {

using quad = __float128;
using qcomplex = std::complex<quad>;

double to_double(quad x) { return (double)x; }

quad qabs(quad x) { return x < 0 ? -x : x; }

quad qcabs(qcomplex z) { return hypotq(z.real(), z.imag()); }

// integral over [0,T] of exp(-a s) ds, real quad version
quad q_exp_integral(quad a, quad T) {
  if (a == 0) return T;
  return -expm1q(-a * T) / a;
}

// sum over m < cells of exp(-a m)
quad q_geometric(quad a, int cells) {
  if (a == 0) return (quad)cells;
  return expm1q(-a * cells) / expm1q(-a);
}

struct QuadMatrix {
  int n = 0;
  std::vector<quad> a;  // row-major
  quad& at(int i, int j) { return a[i * n + j]; }
  quad at(int i, int j) const { return a[i * n + j]; }
};

QuadMatrix quad_gram(const Eigen::VectorXd& exponents, quad T) {
  const int n = (int)exponents.size();
  QuadMatrix g{n, std::vector<quad>((size_t)n * n)};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      g.at(i, j) = q_exp_integral((quad)exponents[i] + (quad)exponents[j], T);
  return g;
}

// Unevaluated two-term sum hi + lo with |lo| below half an ulp of hi. The
// 16-member ladders reach cond(G) past 1/eps of plain quad, where a quad
// factorization stalls at an O(1) defect; the compensated representation
// roughly doubles the working digits and keeps the refinement contracting.
struct qq {
  quad hi = 0;
  quad lo = 0;
};

qq qq_two_sum(quad a, quad b) {
  const quad s = a + b;
  const quad bb = s - a;
  return {s, (a - (s - bb)) + (b - bb)};
}

// requires |a| >= |b| or a == 0
qq qq_quick_sum(quad a, quad b) {
  const quad s = a + b;
  return {s, b - (s - a)};
}

qq qq_add(qq a, qq b) {
  qq s = qq_two_sum(a.hi, b.hi);
  const qq t = qq_two_sum(a.lo, b.lo);
  s = qq_quick_sum(s.hi, s.lo + t.hi);
  return qq_quick_sum(s.hi, s.lo + t.lo);
}

qq qq_sub(qq a, qq b) { return qq_add(a, {-b.hi, -b.lo}); }

qq qq_mul(qq a, qq b) {
  const quad p = a.hi * b.hi;
  const quad err = fmaq(a.hi, b.hi, -p);
  return qq_quick_sum(p, err + (a.hi * b.lo + a.lo * b.hi));
}

qq qq_div(qq a, qq b) {
  const quad q1 = a.hi / b.hi;
  qq r = qq_sub(a, qq_mul({q1, 0}, b));
  const quad q2 = r.hi / b.hi;
  r = qq_sub(r, qq_mul({q2, 0}, b));
  const quad q3 = r.hi / b.hi;
  return qq_add(qq_quick_sum(q1, q2), {q3, 0});
}

struct QqLu {
  int n = 0;
  std::vector<qq> lu;
  std::vector<int> piv;
  bool ok = false;

  explicit QqLu(const QuadMatrix& m) : n(m.n), lu(m.a.size()), piv(m.n) {
    for (size_t i = 0; i < m.a.size(); ++i) lu[i] = {m.a[i], 0};
    ok = true;
    for (int k = 0; k < n; ++k) {
      int p = k;
      for (int i = k + 1; i < n; ++i)
        if (qabs(lu[i * n + k].hi) > qabs(lu[p * n + k].hi)) p = i;
      piv[k] = p;
      if (p != k)
        for (int j = 0; j < n; ++j) std::swap(lu[k * n + j], lu[p * n + j]);
      if (lu[k * n + k].hi == 0) {
        ok = false;
        return;
      }
      for (int i = k + 1; i < n; ++i) {
        lu[i * n + k] = qq_div(lu[i * n + k], lu[k * n + k]);
        const qq f = lu[i * n + k];
        for (int j = k + 1; j < n; ++j)
          lu[i * n + j] = qq_sub(lu[i * n + j], qq_mul(f, lu[k * n + j]));
      }
    }
  }

  // The factorization swaps full rows, so the stored L already lives in
  // permuted coordinates: apply every pivot to b before the sweeps, not
  // interleaved with them.
  void solve(std::vector<qq>& b) const {
    for (int k = 0; k < n; ++k)
      if (piv[k] != k) std::swap(b[k], b[piv[k]]);
    for (int k = 0; k < n; ++k) {
      for (int i = k + 1; i < n; ++i)
        b[i] = qq_sub(b[i], qq_mul(lu[i * n + k], b[k]));
    }
    for (int i = n - 1; i >= 0; --i) {
      for (int j = i + 1; j < n; ++j)
        b[i] = qq_sub(b[i], qq_mul(lu[i * n + j], b[j]));
      b[i] = qq_div(b[i], lu[i * n + i]);
    }
  }
};

// X = G^{-1} with iterative refinement. Returns the final max |G X - I| of
// the internal two-term inverse; x receives its quad rounding, whose own
// defect is bounded by the returned value plus eps(quad) amplification.
quad solve_refined(const QuadMatrix& g, QuadMatrix& x) {
  const int n = g.n;
  const QqLu lu(g);
  if (!lu.ok) return HUGE_VALQ;
  std::vector<qq> xq((size_t)n * n);
  std::vector<qq> col(n);
  for (int j = 0; j < n; ++j) {
    std::fill(col.begin(), col.end(), qq{0, 0});
    col[j] = {1, 0};
    lu.solve(col);
    for (int i = 0; i < n; ++i) xq[(size_t)i * n + j] = col[i];
  }
  quad best = HUGE_VALQ;
  for (int sweep = 0; sweep < 8; ++sweep) {
    quad worst = 0;
    std::vector<qq> r((size_t)n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        qq acc = (i == j) ? qq{1, 0} : qq{0, 0};
        for (int k = 0; k < n; ++k)
          acc = qq_sub(acc, qq_mul({g.at(i, k), 0}, xq[(size_t)k * n + j]));
        r[(size_t)i * n + j] = acc;
        worst = std::max(worst, qabs(acc.hi));
      }
    best = std::min(best, worst);
    if (worst < (quad)1e-25 || worst > best * (quad)1e4) break;
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) col[i] = r[(size_t)i * n + j];
      lu.solve(col);
      for (int i = 0; i < n; ++i) {
        qq& xi = xq[(size_t)i * n + j];
        xi = qq_add(xi, col[i]);
      }
    }
  }
  x.n = n;
  x.a.assign((size_t)n * n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      x.at(i, j) = xq[(size_t)i * n + j].hi + xq[(size_t)i * n + j].lo;
  return best;
}

constexpr double kCertifyTol = 1e-15;

struct QuadFamily {
  QuadMatrix gram;
  QuadMatrix inv;
  quad residual = 0;
};

QuadFamily quad_family(const Eigen::VectorXd& exponents, double T) {
  QuadFamily f;
  f.gram = quad_gram(exponents, (quad)T);
  f.residual = solve_refined(f.gram, f.inv);
  if (!(f.residual < (quad)kCertifyTol))
    throw IllConditioned(
        "biorthogonal gram solve failed to certify at horizon " +
        std::to_string(T) + " (defect " + std::to_string(to_double(f.residual)) +
        ")");
  return f;
}

// moment of unit-cell member m against exp(-mu t) on [0,1]
quad unit_member_moment(const Eigen::VectorXd& exponents, const QuadFamily& f,
                        int member, quad mu) {
  quad acc = 0;
  for (int k = 0; k < f.gram.n; ++k)
    acc += f.inv.at(k, member) * q_exp_integral(mu + (quad)exponents[k], 1);
  return acc;
}

// max_i |(G c - e_m)_i| of a double coefficient vector, measured exactly
quad column_defect(const QuadMatrix& g, const std::vector<double>& c, int m) {
  quad worst = 0;
  for (int i = 0; i < g.n; ++i) {
    quad acc = (i == m) ? (quad)-1 : (quad)0;
    for (int k = 0; k < g.n; ++k) acc += g.at(i, k) * (quad)c[k];
    worst = std::max(worst, qabs(acc));
  }
  return worst;
}

// Rounding a certified quad column to double leaves a defect of order
// eps * max_k |g_ik x_km|, about 1e-8 for the steep ladders. The double
// lattice holds nearby vectors with a defect several times smaller because
// the gram is nearly singular; greedy ulp sweeps find one of them.
Eigen::VectorXd round_column_refined(const QuadMatrix& g, const QuadMatrix& x,
                                     int m) {
  const int n = g.n;
  std::vector<double> c(n);
  for (int k = 0; k < n; ++k) c[k] = to_double(x.at(k, m));
  quad best = column_defect(g, c, m);
  for (int sweep = 0; sweep < 8; ++sweep) {
    bool improved = false;
    for (int k = 0; k < n; ++k) {
      const double u = std::abs(c[k]) * std::numeric_limits<double>::epsilon();
      if (u == 0.0) continue;
      for (const double step : {1.0, -1.0, 2.0, -2.0, 4.0, -4.0}) {
        std::vector<double> trial = c;
        trial[k] = c[k] + step * u;
        const quad d = column_defect(g, trial, m);
        if (d < best) {
          best = d;
          c = trial;
          improved = true;
        }
      }
    }
    if (!improved) break;
  }
  Eigen::VectorXd out(n);
  for (int k = 0; k < n; ++k) out[k] = c[k];
  return out;
}

}  // namespace

void validate(const ExponentialFamily& fam) {
  if (fam.horizon <= 0)
    throw std::invalid_argument("family horizon must be positive");
  if (fam.exponents.size() < 1)
    throw std::invalid_argument("family needs at least one exponent");
  if (fam.exponents[0] < -1e-12)
    throw std::invalid_argument("family exponents must be nonnegative");
  for (int i = 0; i + 1 < fam.exponents.size(); ++i) {
    const double gap = fam.exponents[i + 1] - fam.exponents[i];
    if (gap <= 1e-14 * (1 + std::abs(fam.exponents[i])))
      throw std::invalid_argument("family exponents must strictly increase");
  }
}

ExponentialFamily interleaved_family(double mu, int count, double horizon) {
  if (count < 1) throw std::invalid_argument("count must be positive");
  std::vector<double> exps;
  for (int k = 1; (int)exps.size() < count + 2; ++k) {
    exps.push_back(k * k - 1.0);
    exps.push_back(k * k - mu);
  }
  std::sort(exps.begin(), exps.end());
  exps.resize(count);
  ExponentialFamily fam;
  fam.exponents = Eigen::Map<Eigen::VectorXd>(exps.data(), count);
  fam.horizon = horizon;
  validate(fam);
  return fam;
}

BiorthogonalFamily min_norm_biorthogonal(const ExponentialFamily& fam,
                                         double rank_tol) {
  validate(fam);
  const int n = (int)fam.exponents.size();
  const QuadFamily qf = quad_family(fam.exponents, fam.horizon);

  BiorthogonalFamily out;
  out.family = fam;
  out.norms = Eigen::VectorXd(n);
  out.members.reserve(n);

  Eigen::MatrixXd g_d(n, n), x_d(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g_d(i, j) = to_double(qf.gram.at(i, j));
  for (int m = 0; m < n; ++m)
    x_d.col(m) = round_column_refined(qf.gram, qf.inv, m);

  // Defect and norms of the rounded coefficients actually handed to the
  // caller, not of the ideal quad columns they approximate.
  quad worst_defect = 0;
  std::vector<double> col(n);
  for (int m = 0; m < n; ++m) {
    ControlSignal psi;
    psi.exponents = fam.exponents.cast<Complex>();
    psi.coefficients = x_d.col(m).cast<Complex>();
    psi.horizon = fam.horizon;
    out.norms[m] = std::sqrt(std::max(0.0, psi.l2_norm_sq()));
    out.members.push_back(std::move(psi));
    for (int k = 0; k < n; ++k) col[k] = x_d(k, m);
    worst_defect = std::max(worst_defect, column_defect(qf.gram, col, m));
  }
  out.residual = to_double(worst_defect);
  // The extended-precision inverse can certify families whose double
  // rounding is still unusable (near-coincident exponents blow the inverse
  // past 1/eps). Reject those at the delivery level.
  if (!(out.residual < 1e-4))
    throw IllConditioned("biorthogonal family defect " +
                         std::to_string(out.residual) + " at horizon " +
                         std::to_string(fam.horizon) +
                         " exceeds the double-precision delivery bound");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(g_d);
  const Eigen::VectorXd& s = svd.singularValues();
  out.gram_rank = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s[i] > rank_tol * s[0]) ++out.gram_rank;
  out.gram_cond = s[s.size() - 1] > 0
                      ? s[0] / s[s.size() - 1]
                      : std::numeric_limits<double>::infinity();
  return out;
}

Complex PiecewiseSignal::evaluate(double t) const {
  if (t < 0) return unit_cell.evaluate(0.0);
  double cell = std::floor(t);
  if (cell >= cells) cell = cells - 1;  // closed right endpoint
  return unit_cell.evaluate(t - cell);
}

double PiecewiseSignal::l2_norm_sq() const {
  const double per_cell = unit_cell.l2_norm_sq();
  double total = 0.0;
  for (int m = 0; m < cells; ++m) total += per_cell;
  return total;
}

Complex PiecewiseSignal::integral() const { return moment(Complex(0.0)); }

Complex PiecewiseSignal::moment(Complex mu) const {
  Complex geometric;
  if (mu == Complex(0.0))
    geometric = Complex((double)cells, 0.0);
  else
    geometric = cexpm1(-mu * (double)cells) / cexpm1(-mu);
  return geometric * unit_cell.moment(mu);
}

PiecewiseSignal periodic_extension(const ControlSignal& psi1_unit, int cells,
                                   const ExponentialFamily& fam) {
  validate(fam);
  if (cells < 1) throw std::invalid_argument("cell count must be positive");
  if (std::abs(fam.exponents[0]) > 1e-12)
    throw PreconditionViolated(
        "periodic extension needs a zero leading exponent");
  if (std::abs(psi1_unit.horizon - 1.0) > 1e-12)
    throw PreconditionViolated("unit-cell member must live on [0,1]");
  const Complex unit_integral = psi1_unit.moment(Complex(0.0));
  if (std::abs(unit_integral - 1.0) > 1e-8)
    throw PreconditionViolated("unit-cell member must have unit integral");
  for (int n = 1; n < fam.exponents.size(); ++n) {
    const Complex overlap = psi1_unit.moment(Complex(fam.exponents[n], 0.0));
    if (std::abs(overlap) > 1e-8)
      throw PreconditionViolated(
          "unit-cell member must annihilate the other exponentials");
  }
  return PiecewiseSignal{psi1_unit, cells};
}

SeriesSolution moment_series_solution(const ModalSystem& sys,
                                      const StateVector& y0, double T) {
  const MomentProblem p = null_steering_problem(sys, y0, T);
  const int n = (int)p.exponents.size();

  SeriesSolution sol;
  sol.tail.horizon = T;
  sol.moment_residuals = Eigen::VectorXd::Zero(n);
  if (n == 0) return sol;

  for (int i = 0; i < n; ++i)
    if (std::abs(p.exponents[i].imag()) >
        1e-12 * (1 + std::abs(p.exponents[i])))
      throw PreconditionViolated(
          "series construction needs a real exponent ladder");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return p.exponents[a].real() < p.exponents[b].real();
  });
  Eigen::VectorXd lambda(n);
  Eigen::VectorXcd d(n);
  for (int i = 0; i < n; ++i) {
    lambda[i] = p.exponents[order[i]].real();
    d[i] = p.targets[order[i]];
  }

  ExponentialFamily fam{lambda, T};
  validate(fam);

  const bool zero_leading = std::abs(lambda[0]) <= 1e-12;
  const bool zero_excited = zero_leading && std::abs(d[0]) > 0.0;
  const double dnorm = d.norm();
  const double dscale = std::max(1.0, dnorm);

  bool tail_present = false;
  const int tail_start = zero_excited ? 1 : 0;
  for (int i = tail_start; i < n; ++i)
    if (std::abs(d[i]) > 0.0) tail_present = true;

  sol.tail.exponents = lambda.cast<Complex>();
  sol.tail.coefficients = Eigen::VectorXcd::Zero(n);
  if (!zero_excited && !tail_present) return sol;  // nothing to steer

  // Tail rides the horizon-T family; the quad inverse also supplies the
  // member norms for the divergence test.
  Eigen::VectorXd tail_norms = Eigen::VectorXd::Zero(n);
  std::vector<qcomplex> w((size_t)n, qcomplex(0, 0));
  QuadMatrix gram_T;
  if (tail_present) {
    const QuadFamily qT = quad_family(lambda, T);
    gram_T = qT.gram;
    for (int j = 0; j < n; ++j) {
      qcomplex acc(0, 0);
      for (int i = tail_start; i < n; ++i)
        acc += qcomplex((quad)d[i].real(), (quad)d[i].imag()) *
               qT.inv.at(j, i);
      w[j] = acc;
      tail_norms[j] = std::sqrt(std::max(0.0, to_double(qT.inv.at(j, j))));
    }
  } else {
    gram_T = quad_gram(lambda, (quad)T);
  }
  for (int j = 0; j < n; ++j)
    sol.tail.coefficients[j] =
        Complex(to_double(w[j].real()), to_double(w[j].imag()));

  // Cauchy check on the increments |d_n| * ||Psi_n||: two consecutive growing
  // increments above the noise floor mean the expansion is not summable.
  {
    const double floor = 1e-10 * dscale;
    std::vector<double> eps;
    for (int i = tail_start; i < n; ++i)
      eps.push_back(std::abs(d[i]) * tail_norms[i]);
    int run = 0;
    for (size_t i = 1; i < eps.size(); ++i) {
      if (eps[i] > floor && eps[i - 1] > floor && eps[i] > eps[i - 1])
        ++run;
      else
        run = 0;
      if (run >= 2)
        throw SeriesDiverged(
            "expansion increments grow past the summability floor at mode " +
            std::to_string(tail_start + (int)i));
    }
    if (eps.size() >= 2 && eps.back() > 0 && eps[eps.size() - 2] > 0) {
      const double q = std::min(0.9, eps.back() / eps[eps.size() - 2]);
      sol.truncation_tail = eps.back() * (1 + q / (1 - q));
    } else if (!eps.empty()) {
      sol.truncation_tail = eps.back();
    }
  }

  std::vector<qcomplex> residual((size_t)n, qcomplex(0, 0));
  qcomplex alpha_q(0, 0);
  quad head_norm_sq = 0;
  std::vector<quad> head_moment((size_t)n, (quad)0);

  if (zero_excited) {
    const long cells_l = std::lround(T);
    if (std::abs(T - (double)cells_l) > 1e-9 || cells_l < 1)
      throw PreconditionViolated(
          "integer horizon required when the zero exponent is excited");
    const int cells = (int)cells_l;

    const QuadFamily q1 = quad_family(lambda, 1.0);
    head_norm_sq = q1.inv.at(0, 0);

    // head member assembled for the caller
    ControlSignal psi1;
    psi1.exponents = lambda.cast<Complex>();
    psi1.coefficients =
        round_column_refined(q1.gram, q1.inv, 0).cast<Complex>();
    psi1.horizon = 1.0;
    sol.head = PiecewiseSignal{psi1, cells};
    sol.has_head = true;

    for (int i = 0; i < n; ++i)
      head_moment[i] = q_geometric((quad)lambda[i], cells) *
                       unit_member_moment(lambda, q1, 0, (quad)lambda[i]);

    // integral of the tail = sum_j w_j * integral of exp(-lambda_j t)
    qcomplex tail_integral(0, 0);
    for (int j = 0; j < n; ++j)
      tail_integral += w[j] * q_exp_integral((quad)lambda[j], (quad)T);

    alpha_q = (qcomplex((quad)d[0].real(), (quad)d[0].imag()) -
               tail_integral) /
              (quad)cells;
    sol.alpha = Complex(to_double(alpha_q.real()), to_double(alpha_q.imag()));

    for (int i = 0; i < n; ++i) {
      qcomplex r = alpha_q * head_moment[i] -
                   qcomplex((quad)d[i].real(), (quad)d[i].imag());
      for (int j = 0; j < n; ++j) r += gram_T.at(i, j) * w[j];
      residual[i] = r;
    }
  } else {
    for (int i = 0; i < n; ++i) {
      qcomplex r = -qcomplex((quad)d[i].real(), (quad)d[i].imag());
      for (int j = 0; j < n; ++j) r += gram_T.at(i, j) * w[j];
      residual[i] = r;
    }
  }

  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    sol.moment_residuals[i] = to_double(qcabs(residual[i]));
    worst = std::max(worst, sol.moment_residuals[i]);
  }
  if (worst > 1e-7 * dscale)
    throw Infeasible("series moment residual " + std::to_string(worst) +
                     " exceeds tolerance");

  // energy: |alpha|^2 ||head||^2 + 2 Re(conj(alpha) <head, tail>) + ||tail||^2
  quad energy = 0;
  if (sol.has_head) {
    const quad a2 = alpha_q.real() * alpha_q.real() +
                    alpha_q.imag() * alpha_q.imag();
    energy += a2 * (quad)sol.head.cells * head_norm_sq;
    qcomplex cross(0, 0);  // <head, tail> with the head real-valued
    for (int j = 0; j < n; ++j)
      cross += qcomplex(w[j].real(), -w[j].imag()) * head_moment[j];
    energy += 2 * (alpha_q.real() * cross.real() +
                   alpha_q.imag() * cross.imag());
  }
  quad tail_sq = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      // conj(w_i) w_j G(i,j), real part
      tail_sq += (w[i].real() * w[j].real() + w[i].imag() * w[j].imag()) *
                 gram_T.at(i, j);
    }
  energy += tail_sq;
  sol.energy = std::max(0.0, to_double(energy));
  sol.norm = std::sqrt(sol.energy);
  return sol;
}

}  // namespace ncve
