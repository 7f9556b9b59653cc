#include "ncve/loi.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace ncve {
namespace {

struct ActiveMode {
  Complex lambda;
  Complex target;  // -y0 / b
};

// Shared steering preconditions: diagonalizable, excited modes reachable.
std::vector<ActiveMode> active_modes(const ModalSystem& sys,
                                     const StateVector& y0) {
  validate(sys);
  if (!sys.jordan_blocks.empty())
    throw NotDiagonalizable(
        "steering energies are defined on diagonalizable systems only");
  if (y0.size() != Eigen::Index(sys.modes.size()))
    throw std::invalid_argument("initial state length does not match the mode count");
  std::vector<ActiveMode> active;
  for (size_t n = 0; n < sys.modes.size(); ++n) {
    const Mode& mode = sys.modes[n];
    if (mode.coeff == Complex(0.0, 0.0)) {
      if (std::abs(y0[n]) > 0.0) {
        std::ostringstream os;
        os << "mode " << mode.label << " is excited but has zero control coefficient";
        throw UncontrollableMode(os.str());
      }
      continue;
    }
    active.push_back({mode.eigenvalue, -y0[n] / mode.coeff});
  }
  return active;
}

double shifted_steering_energy(const ModalSystem& sys, const StateVector& y0,
                               double T, double tau) {
  const auto active = active_modes(sys, y0);
  const int n = int(active.size());
  if (n == 0) return 0.0;

  Eigen::MatrixXcd a(n, n), gram(n, n);
  Eigen::VectorXcd t(n);
  for (int r = 0; r < n; ++r) {
    t[r] = active[r].target;
    for (int c = 0; c < n; ++c) {
      const Complex lr = active[r].lambda, lc = active[c].lambda;
      const Complex z = lr + std::conj(lc);
      a(r, c) = exp_integral(z, T) * std::exp(-std::conj(lc) * tau);
      gram(r, c) = std::exp(-z * tau) * exp_integral(z, T);
    }
  }
  if (!a.allFinite() || !gram.allFinite())
    throw NonFiniteEntry("shifted steering matrices overflowed");

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(
      a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-12);
  const Eigen::VectorXcd coeff = svd.solve(t);
  const double scale = std::max(t.norm(), 1e-300);
  if ((a * coeff - t).norm() > 1e-6 * scale)
    throw Infeasible("shifted steering constraints are not satisfiable");
  const double energy = (coeff.dot(gram * coeff)).real();
  return std::max(0.0, energy);
}

}  // namespace

double steering_energy(const ModalSystem& sys, const StateVector& y0, double T,
                       double start_time) {
  if (!(T > 0) || !std::isfinite(T))
    throw std::invalid_argument("steering horizon must be positive");
  if (!(start_time >= 0) || !std::isfinite(start_time))
    throw std::invalid_argument("start_time must be nonnegative");
  if (start_time == 0.0)
    return solve_moment_min_norm(null_steering_problem(sys, y0, T)).energy;
  return shifted_steering_energy(sys, y0, T, start_time);
}

double QuadraticForm::value(const StateVector& coords) const {
  if (coords.size() != matrix.rows())
    throw std::invalid_argument("coordinate length does not match the form");
  return coords.dot(matrix * coords).real();
}

double QuadraticForm::norm() const {
  if (matrix.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(matrix,
                                                     Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

QuadraticForm build_P(const ModalSystem& sys, double T_proxy,
                      const std::vector<StateVector>& basis,
                      double start_time) {
  if (basis.empty()) throw std::invalid_argument("basis must be nonempty");
  for (const auto& vec : basis)
    if (vec.size() != Eigen::Index(sys.modes.size()))
      throw std::invalid_argument("basis vector length does not match the mode count");

  const auto energy = [&](const StateVector& y) {
    try {
      return steering_energy(sys, y, T_proxy, start_time);
    } catch (const UncontrollableMode& e) {
      throw NotControllable(e.what());
    } catch (const Infeasible& e) {
      throw NotControllable(e.what());
    }
  };

  const int n = int(basis.size());
  const Complex iu(0.0, 1.0);
  Eigen::MatrixXcd raw(n, n);
  for (int i = 0; i < n; ++i) {
    const StateVector& xi = basis[i];
    for (int j = 0; j < n; ++j) {
      // entry (i, j) is <basis_i, P basis_j>: linear in basis_j, conjugate
      // linear in basis_i
      const StateVector& x = basis[j];
      const double re =
          energy(0.5 * (x + xi)) - energy(0.5 * (x - xi));
      const double im =
          energy(0.5 * (x + iu * xi)) - energy(0.5 * (x - iu * xi));
      raw(i, j) = Complex(re, im);
    }
  }

  QuadraticForm form;
  form.horizon_used = T_proxy;
  form.basis_size = n;
  form.hermitian_defect =
      (raw - raw.adjoint().eval()).cwiseAbs().maxCoeff();
  double diag = 0.0;
  for (int i = 0; i < n; ++i)
    diag = std::max(diag, std::abs(raw(i, i) - Complex(energy(basis[i]), 0.0)));
  form.diag_consistency = diag;
  form.matrix = 0.5 * (raw + raw.adjoint().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(form.matrix,
                                                     Eigen::EigenvaluesOnly);
  form.min_eigenvalue = es.eigenvalues().minCoeff();
  return form;
}

QuadraticForm build_P(const ModalSystem& sys, double T_proxy) {
  std::vector<StateVector> basis;
  const int n = int(sys.modes.size());
  for (int i = 0; i < n; ++i) {
    StateVector e = StateVector::Zero(n);
    e[i] = Complex(1.0, 0.0);
    basis.push_back(std::move(e));
  }
  return build_P(sys, T_proxy, basis);
}

bool proxy_horizon_converged(const ModalSystem& sys,
                             const std::vector<StateVector>& basis, double T) {
  for (const auto& vec : basis) {
    const double z1 = steering_energy(sys, vec, T);
    if (z1 < 1e-12) continue;
    const double z2 = steering_energy(sys, vec, 2 * T);
    if (z2 / z1 > 0.99) continue;
    return false;
  }
  return true;
}

LoiCheckReport loi_check(const QuadraticForm& P, const ModalSystem& sys,
                         const StateVector& y0, const ControlSignal& u,
                         const std::vector<double>& times) {
  validate(sys);
  if (!sys.jordan_blocks.empty())
    throw NotDiagonalizable("trajectory closed forms need a diagonalizable system");
  const int n = int(sys.modes.size());
  if (y0.size() != n)
    throw std::invalid_argument("initial state length does not match the mode count");
  if (P.basis_size != n || P.matrix.rows() != n)
    throw std::invalid_argument("the form must be in canonical modal coordinates");
  if (times.empty()) throw std::invalid_argument("need at least one sample time");
  for (double t : times)
    if (!(t >= 0.0) || t > u.horizon + 1e-9)
      throw std::invalid_argument("sample times must lie within the control horizon");

  LoiCheckReport report;
  report.times = times;
  const double base = P.value(y0);
  const double pnorm = P.norm();
  report.tolerance = -1e-9 * (1.0 + pnorm * y0.squaredNorm());

  const int terms = int(u.exponents.size());
  StateVector y(n);
  for (double t : times) {
    for (int k = 0; k < n; ++k) {
      const Complex lambda = sys.modes[k].eigenvalue;
      Complex forced(0.0, 0.0);
      for (int m = 0; m < terms; ++m)
        forced += u.coefficients[m] *
                  exp_integral(lambda + std::conj(u.exponents[m]), t);
      y[k] = std::exp(lambda * t) * (y0[k] + sys.modes[k].coeff * forced);
    }
    if (!y.allFinite()) throw NonFiniteEntry("trajectory overflowed");

    double cost = 0.0;
    for (int m = 0; m < terms; ++m)
      for (int k = 0; k < terms; ++k)
        cost += (u.coefficients[m] * std::conj(u.coefficients[k]) *
                 exp_integral(std::conj(u.exponents[m]) + u.exponents[k], t))
                    .real();

    report.values.push_back(P.value(y) - base + cost);
  }
  report.worst =
      *std::min_element(report.values.begin(), report.values.end());
  report.pass = report.worst >= report.tolerance;
  return report;
}

LoiCheckReport loi_random_trials(const QuadraticForm& P, const ModalSystem& sys,
                                 int trials, std::uint64_t seed,
                                 double horizon) {
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  if (!(horizon > 0)) throw std::invalid_argument("horizon must be positive");
  std::vector<double> grid;
  for (int k = 6; k >= 0; --k) grid.push_back(horizon / double(1 << k));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = int(sys.modes.size());

  LoiCheckReport aggregate;
  aggregate.times = grid;
  aggregate.trajectories = trials;
  aggregate.pass = true;
  bool first = true;
  for (int trial = 0; trial < trials; ++trial) {
    StateVector y0(n);
    for (int i = 0; i < n; ++i) y0[i] = Complex(gauss(rng), gauss(rng));
    y0 /= std::max(1.0, y0.norm());

    ControlSignal u;
    u.horizon = horizon;
    u.exponents.resize(n);
    u.coefficients.resize(n);
    for (int i = 0; i < n; ++i) {
      u.exponents[i] = sys.modes[i].eigenvalue;
      u.coefficients[i] = Complex(gauss(rng), gauss(rng));
    }
    u.coefficients /= std::max(1.0, u.coefficients.norm());

    const LoiCheckReport one = loi_check(P, sys, y0, u, grid);
    if (first || one.worst < aggregate.worst) {
      aggregate.worst = one.worst;
      aggregate.values = one.values;
      aggregate.tolerance = one.tolerance;
      first = false;
    }
    aggregate.pass = aggregate.pass && one.pass;
  }
  return aggregate;
}

double schwarz_slack(const QuadraticForm& P, int pairs, std::uint64_t seed) {
  if (pairs < 1) throw std::invalid_argument("need at least one pair");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = int(P.matrix.rows());
  double worst = -1e300;
  for (int trial = 0; trial < pairs; ++trial) {
    StateVector x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = Complex(gauss(rng), gauss(rng));
      y[i] = Complex(gauss(rng), gauss(rng));
    }
    const double px = std::max(0.0, P.value(x));
    const double py = std::max(0.0, P.value(y));
    const double cross = std::abs(x.dot(P.matrix * y));
    worst = std::max(worst, cross - std::sqrt(px * py));
  }
  return worst;
}

ConsistencyReport energy_quadratic_consistency(const ModalSystem& sys, double T,
                                               int trials, std::uint64_t seed) {
  if (trials < 3)
    throw std::invalid_argument("need at least three trials to cover the special cases");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = int(sys.modes.size());

  ConsistencyReport report;
  report.trials = trials;
  for (int trial = 0; trial < trials; ++trial) {
    StateVector x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = Complex(gauss(rng), gauss(rng));
      y[i] = Complex(gauss(rng), gauss(rng));
    }
    x /= std::max(1.0, x.norm());
    y /= std::max(1.0, y.norm());
    Complex alpha(gauss(rng), gauss(rng));
    if (trial == 0) alpha = Complex(-1.0, 0.0);
    if (trial == 1) alpha = Complex(0.0, 1.0);
    if (trial == 2) x = y;  // parallelogram reduces to I(2y) = 4 I(y)

    const double iy = steering_energy(sys, y, T);
    const double ia = steering_energy(sys, StateVector(alpha * y), T);
    const double homog =
        std::abs(ia - std::norm(alpha) * iy) / std::max(iy, 1e-300);
    report.worst_homogeneity = std::max(report.worst_homogeneity, homog);

    const double ix = steering_energy(sys, x, T);
    const double sum = steering_energy(sys, StateVector(x + y), T);
    const double diff = steering_energy(sys, StateVector(x - y), T);
    const double para = std::abs(sum + diff - 2 * ix - 2 * iy) /
                        std::max(2 * ix + 2 * iy, 1e-300);
    report.worst_parallelogram = std::max(report.worst_parallelogram, para);
  }
  report.pass =
      report.worst_homogeneity <= 1e-8 && report.worst_parallelogram <= 1e-7;
  return report;
}

}  // namespace ncve
