#include <doctest.h>

#include <cmath>

#include "ncve/loi.hpp"
#include "oracles.hpp"

using namespace ncve;

namespace {

ModalSystem make_system(const std::vector<Complex>& eigs,
                        const std::vector<Complex>& coeffs) {
  ModalSystem sys;
  for (size_t i = 0; i < eigs.size(); ++i)
    sys.modes.push_back({eigs[i], coeffs[i], "m" + std::to_string(i + 1)});
  return sys;
}

ModalSystem mixed_decay_system() {
  return make_system({Complex(0.5), Complex(-0.5), Complex(-1.5), Complex(-3.0),
                      Complex(-5.0), Complex(-8.0)},
                     std::vector<Complex>(6, Complex(1.0)));
}

StateVector unit(int n, int k) {
  StateVector e = StateVector::Zero(n);
  e[k] = Complex(1.0, 0.0);
  return e;
}

}  // namespace

TEST_CASE("shifted steering window leaves the energy unchanged") {
  const ModalSystem sys =
      make_system({Complex(-0.4, 0.9), Complex(-1.1), Complex(0.2, -0.3)},
                  {Complex(1.0), Complex(0.7, -0.2), Complex(1.3)});
  StateVector y0(3);
  y0 << Complex(0.8, -0.1), Complex(-0.4, 0.5), Complex(0.3, 0.0);
  const double direct = steering_energy(sys, y0, 6.0);
  for (double tau : {0.8, 2.5}) {
    const double shifted = steering_energy(sys, y0, 6.0, tau);
    CHECK(std::abs(shifted - direct) <= 1e-8 * std::max(direct, 1e-300));
  }
}

TEST_CASE("P does not depend on the start of the steering window") {
  const ModalSystem sys =
      make_system({Complex(-0.4, 0.9), Complex(-1.1), Complex(0.2, -0.3)},
                  {Complex(1.0), Complex(0.7, -0.2), Complex(1.3)});
  const QuadraticForm p0 = build_P(sys, 6.0);
  std::vector<StateVector> basis;
  for (int i = 0; i < 3; ++i) basis.push_back(unit(3, i));
  const QuadraticForm p1 = build_P(sys, 6.0, basis, 0.8);
  const double scale = p0.matrix.cwiseAbs().maxCoeff();
  CHECK((p0.matrix - p1.matrix).cwiseAbs().maxCoeff() <= 1e-8 * scale);
}

TEST_CASE("P is Hermitian, diagonal-consistent, and positive semidefinite") {
  const QuadraticForm form = build_P(mixed_decay_system(), 64.0);
  const double scale = 1.0 + form.norm();
  CHECK(form.hermitian_defect <= 1e-12 * scale);
  CHECK(form.diag_consistency <= 1e-12 * scale);
  CHECK(form.min_eigenvalue >= -1e-9 * scale);
  CHECK(form.basis_size == 6);
  CHECK(form.horizon_used == 64.0);
}

TEST_CASE("P of a uniformly stable system collapses as the horizon grows") {
  const ModalSystem sys =
      make_system({Complex(-0.5), Complex(-1.5), Complex(-3.0)},
                  std::vector<Complex>(3, Complex(1.0)));
  const QuadraticForm early = build_P(sys, 1.0);
  const QuadraticForm late = build_P(sys, 64.0);
  CHECK(late.norm() < 1e-2 * early.norm());
}

TEST_CASE("an unstable mode keeps its energy no matter the horizon") {
  const ModalSystem sys =
      make_system({Complex(0.5), Complex(-1.0), Complex(-2.0)},
                  std::vector<Complex>(3, Complex(1.0)));
  const StateVector e1 = unit(3, 0);
  const double mid = build_P(sys, 32.0).value(e1);
  const double late = build_P(sys, 64.0).value(e1);
  CHECK(mid > 0.5);
  CHECK(std::abs(late - mid) < 0.05 * mid);
}

TEST_CASE("a purely imaginary mode loses its energy as the horizon grows") {
  const ModalSystem sys = make_system(
      {Complex(0.0, 2.0), Complex(-0.3), Complex(-0.6), Complex(-0.9)},
      std::vector<Complex>(4, Complex(1.0)));
  const StateVector e1 = unit(4, 0);
  const double early = build_P(sys, 1.0).value(e1);
  const double late = build_P(sys, 64.0).value(e1);
  CHECK(late < 1e-4 * early);
}

TEST_CASE("zero state costs nothing") {
  const ModalSystem sys = mixed_decay_system();
  CHECK(steering_energy(sys, StateVector::Zero(6), 8.0) == 0.0);
  const QuadraticForm form = build_P(sys, 16.0);
  CHECK(form.value(StateVector::Zero(6)) == 0.0);
}

TEST_CASE("free decay of a stable system never gains value") {
  const ModalSystem sys =
      make_system({Complex(-0.5), Complex(-1.5), Complex(-3.0)},
                  std::vector<Complex>(3, Complex(1.0)));
  const QuadraticForm form = build_P(sys, 32.0);
  StateVector y0(3);
  y0 << Complex(0.9, 0.2), Complex(-0.3, 0.4), Complex(0.1, -0.6);
  ControlSignal rest;
  rest.horizon = 8.0;
  const LoiCheckReport report =
      loi_check(form, sys, y0, rest, {0.125, 0.5, 1.0, 2.0, 4.0, 8.0});
  CHECK(report.pass);
  CHECK(report.values.size() == 6);
}

TEST_CASE("with a zero form the inequality is the control cost itself") {
  const ModalSystem sys =
      make_system({Complex(-1.0), Complex(-2.0)}, {Complex(1.0), Complex(1.0)});
  QuadraticForm zero;
  zero.matrix = Eigen::MatrixXcd::Zero(2, 2);
  zero.basis_size = 2;
  ControlSignal u;
  u.horizon = 4.0;
  u.exponents.resize(2);
  u.exponents << Complex(-1.0), Complex(-2.0);
  u.coefficients.resize(2);
  u.coefficients << Complex(0.3, -0.4), Complex(-0.2, 0.1);
  StateVector y0(2);
  y0 << Complex(1.0), Complex(-0.5);
  const LoiCheckReport report = loi_check(zero, sys, y0, u, {1.0, 2.0, 4.0});
  for (size_t i = 0; i < report.values.size(); ++i) {
    CHECK(report.values[i] >= 0.0);
    const double direct =
        ControlSignal{u.exponents, u.coefficients, report.times[i]}.l2_norm_sq();
    CHECK(report.values[i] == doctest::Approx(direct).epsilon(1e-12));
  }
  CHECK(report.pass);
}

TEST_CASE("random controlled trajectories satisfy the inequality") {
  const ModalSystem sys = mixed_decay_system();
  const QuadraticForm form = build_P(sys, 64.0);
  const LoiCheckReport report = loi_random_trials(form, sys, 20, 11, 8.0);
  CHECK(report.pass);
  CHECK(report.trajectories == 20);
  CHECK(report.times.front() == doctest::Approx(0.125));
  CHECK(report.times.back() == doctest::Approx(8.0));
}

TEST_CASE("the form obeys the Schwarz inequality") {
  const QuadraticForm form = build_P(mixed_decay_system(), 64.0);
  CHECK(schwarz_slack(form, 50, 23) <= 1e-9);
}

TEST_CASE("minimal energies behave like a quadratic form") {
  const ModalSystem sys = make_system(
      {Complex(-0.3), Complex(-0.8, 0.5), Complex(-1.7), Complex(-2.4)},
      {Complex(1.0), Complex(0.6, 0.3), Complex(-0.9), Complex(1.4)});
  const ConsistencyReport report =
      energy_quadratic_consistency(sys, 4.0, 30, 5);
  CHECK(report.pass);
  CHECK(report.worst_homogeneity <= 1e-8);
  CHECK(report.worst_parallelogram <= 1e-7);
  CHECK(report.trials == 30);
}

TEST_CASE("an unreachable excited mode blocks the construction") {
  const ModalSystem sys =
      make_system({Complex(-1.0), Complex(-2.0)}, {Complex(1.0), Complex(0.0)});
  CHECK_THROWS_AS(build_P(sys, 8.0), NotControllable);
}

TEST_CASE("proxy-horizon convergence rule") {
  const ModalSystem fine =
      make_system({Complex(0.5), Complex(-1.0)}, {Complex(1.0), Complex(1.0)});
  std::vector<StateVector> basis{unit(2, 0), unit(2, 1)};
  CHECK(proxy_horizon_converged(fine, basis, 16.0));

  const ModalSystem critical = make_system({Complex(0.0)}, {Complex(1.0)});
  CHECK_FALSE(proxy_horizon_converged(critical, {unit(1, 0)}, 16.0));
}
