#include "ncve/parabolic.hpp"

#include <cmath>
#include <cstdio>

namespace ncve {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

Eigen::Vector2cd eigenvector_for(const Eigen::Matrix2d& a, Complex mu) {
  const Eigen::Vector2cd cand1(Complex(a(0, 1)), mu - a(0, 0));
  const Eigen::Vector2cd cand2(mu - a(1, 1), Complex(a(1, 0)));
  Eigen::Vector2cd v = cand1.norm() >= cand2.norm() ? cand1 : cand2;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if (v.norm() <= 1e-14 * scale) {
    // coupling acts as a scalar on this eigenvalue; coordinate axes work
    v = std::abs(mu - a(0, 0)) <= std::abs(mu - a(1, 1))
            ? Eigen::Vector2cd(1.0, 0.0)
            : Eigen::Vector2cd(0.0, 1.0);
  }
  v /= v.norm();
  // pin the phase so diagonal couplings get the identity basis back
  const int lead = std::abs(v(0)) >= std::abs(v(1)) ? 0 : 1;
  v *= std::abs(v(lead)) / v(lead);
  return v;
}

}  // namespace

SpectrumReport parabolic_spectrum(const ParabolicSystem& ps) {
  if (ps.K < 1) throw std::invalid_argument("K must be positive");
  if (!ps.A0.allFinite() || !ps.B0.allFinite())
    throw NonFiniteEntry("coupling data must be finite");

  SpectrumReport rep;
  const double tr = ps.A0.trace();
  const double det = ps.A0.determinant();
  const Complex root = std::sqrt(Complex(tr * tr - 4 * det, 0.0));
  Complex mu1 = (tr + root) / 2.0;
  Complex mu2 = (tr - root) / 2.0;
  if (mu1.real() < mu2.real() ||
      (mu1.real() == mu2.real() && mu1.imag() < mu2.imag()))
    std::swap(mu1, mu2);
  rep.mu1 = mu1;
  rep.mu2 = mu2;

  const double scale = std::max({1.0, std::abs(mu1), std::abs(mu2)});
  const bool scalar = std::abs(ps.A0(0, 1)) <= 1e-14 * scale &&
                      std::abs(ps.A0(1, 0)) <= 1e-14 * scale &&
                      std::abs(ps.A0(0, 0) - ps.A0(1, 1)) <= 1e-14 * scale;
  rep.diagonalizable = std::abs(mu1 - mu2) > 1e-12 * scale || scalar;

  if (rep.diagonalizable) {
    if (scalar) {
      rep.basis = Eigen::Matrix2cd::Identity();
      rep.basis_inv = rep.basis;
    } else {
      rep.basis.col(0) = eigenvector_for(ps.A0, mu1);
      rep.basis.col(1) = eigenvector_for(ps.A0, mu2);
      const Complex d = rep.basis.determinant();
      rep.basis_inv << rep.basis(1, 1) / d, -rep.basis(0, 1) / d,
          -rep.basis(1, 0) / d, rep.basis(0, 0) / d;
    }
  } else {
    rep.basis.setZero();
    rep.basis_inv.setZero();
  }

  for (int k = 1; k <= ps.K; ++k) {
    rep.eigenvalues.push_back(mu1 - Complex(k * k, 0.0));
    rep.eigenvalues.push_back(mu2 - Complex(k * k, 0.0));
  }
  return rep;
}

ControllabilityReport controllability_check(const ParabolicSystem& ps) {
  const SpectrumReport spec = parabolic_spectrum(ps);
  ControllabilityReport rep;

  Eigen::Matrix2d kalman;
  kalman.col(0) = ps.B0;
  kalman.col(1) = ps.A0 * ps.B0;
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(kalman);
  const double s0 = svd.singularValues()[0];
  const double s1 = svd.singularValues()[1];
  rep.sigma_ratio = s0 > 0 ? s1 / s0 : 0.0;
  rep.rank_ok = rep.sigma_ratio >= 1e-10;

  const Complex gap = spec.mu1 - spec.mu2;
  if (std::abs(gap.imag()) <= 1e-9) {
    const double delta = gap.real();
    if (std::abs(delta) <= 1e-9) {
      rep.resonance = true;  // both branches share an eigenvalue ladder
    } else {
      const int j_max = (int)std::ceil((std::abs(delta) + 3.0) / 2.0) +
                        10 * ps.K;
      for (int j = 2; j <= j_max && !rep.resonance; ++j)
        for (int k = 1; k < j; ++k)
          if (std::abs(delta - double(j * j - k * k)) <= 1e-9) {
            rep.resonance = true;
            rep.resonance_j = j;
            rep.resonance_k = k;
            break;
          }
    }
  }

  rep.controllable = rep.rank_ok && !rep.resonance;
  if (!rep.rank_ok)
    rep.detail = "rank [B0, A0 B0] < 2 (singular value ratio " +
                 fmt(rep.sigma_ratio) + ")";
  else if (rep.resonance && rep.resonance_j > 0)
    rep.detail = "branch eigenvalues collide: mu1 - mu2 = " +
                 fmt(gap.real()) + " = " + std::to_string(rep.resonance_j) +
                 "^2 - " + std::to_string(rep.resonance_k) + "^2";
  else if (rep.resonance)
    rep.detail = "branches share the same eigenvalue ladder (mu1 = mu2)";
  else
    rep.detail = "rank condition holds (singular value ratio " +
                 fmt(rep.sigma_ratio) + ") and no frequency resonance";
  return rep;
}

NcveVerdict ncve_verdict(const ParabolicSystem& ps) {
  const SpectrumReport spec = parabolic_spectrum(ps);
  const ControllabilityReport ctrl = controllability_check(ps);

  NcveVerdict verdict;
  verdict.controllable = ctrl.controllable;
  verdict.reasons.push_back("null controllability: " + ctrl.detail);

  const double top = spec.mu1.real();
  verdict.spectral_ok = top <= 1.0 + 1e-12 * (1.0 + std::abs(spec.mu1));
  verdict.reasons.push_back(
      "spectral condition: max Re mu = " + fmt(top) +
      (verdict.spectral_ok ? " <= 1, every mode of the shifted system decays"
                           : " > 1, an unstable mode persists"));

  verdict.ncve = verdict.controllable && verdict.spectral_ok;
  verdict.reasons.push_back(
      std::string("vanishing-energy null controllability requires both ") +
      "conditions; verdict: " + (verdict.ncve ? "NCVE" : "not NCVE"));
  return verdict;
}

StateVector ModalReduction::map_initial(const Eigen::VectorXcd& v0,
                                        const Eigen::VectorXcd& w0) const {
  if (v0.size() != K || w0.size() != K)
    throw std::invalid_argument("initial data must list K sine coefficients");
  StateVector z(2 * K);
  for (int k = 0; k < K; ++k) {
    const Eigen::Vector2cd pair(v0[k], w0[k]);
    const Eigen::Vector2cd modal = spectrum.basis_inv * pair;
    z[2 * k] = modal[0];
    z[2 * k + 1] = modal[1];
  }
  return z;
}

ModalReduction to_modal(const ParabolicSystem& ps) {
  ModalReduction red;
  red.spectrum = parabolic_spectrum(ps);
  red.K = ps.K;
  if (!red.spectrum.diagonalizable)
    throw NotDiagonalizable(
        "coupling matrix is defective; modal energy machinery is limited to "
        "diagonalizable couplings");

  const Eigen::Vector2cd beta = red.spectrum.basis_inv * ps.B0;
  for (int k = 1; k <= ps.K; ++k) {
    red.system.modes.push_back({red.spectrum.mu1 - Complex(k * k, 0.0),
                                double(k) * beta[0],
                                "v.k" + std::to_string(k)});
    red.system.modes.push_back({red.spectrum.mu2 - Complex(k * k, 0.0),
                                double(k) * beta[1],
                                "w.k" + std::to_string(k)});
  }
  validate(red.system);
  return red;
}

}  // namespace ncve
