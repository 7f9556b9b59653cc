#include "ncve/modal.hpp"

#include <limits>

namespace ncve {

void validate(const ModalSystem& sys) {
  for (const auto& m : sys.modes) {
    if (!is_finite(m.eigenvalue) || !is_finite(m.coeff))
      throw NonFiniteEntry("modal system contains a non-finite entry");
  }
  for (const auto& c : sys.jordan_blocks) {
    if (!is_finite(c.eigenvalue))
      throw NonFiniteEntry("jordan chain has a non-finite eigenvalue");
    if (c.length < 1)
      throw std::invalid_argument("jordan chain length must be positive");
  }
  const auto n = sys.modes.size();
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      const double gap =
          std::abs(sys.modes[i].eigenvalue - sys.modes[j].eigenvalue);
      const double scale = 1.0 + std::abs(sys.modes[i].eigenvalue);
      if (gap <= 1e-14 * scale)
        throw std::invalid_argument("duplicate eigenvalue at modes " +
                                    std::to_string(i) + " and " +
                                    std::to_string(j));
    }
  }
}

double spectral_bound(const ModalSystem& sys) {
  double bound = -std::numeric_limits<double>::infinity();
  for (const auto& m : sys.modes) bound = std::max(bound, m.eigenvalue.real());
  for (const auto& c : sys.jordan_blocks)
    bound = std::max(bound, c.eigenvalue.real());
  return bound;
}

ModalSystem spectral_shift(const ModalSystem& sys, Complex omega) {
  ModalSystem out = sys;
  for (auto& m : out.modes) m.eigenvalue -= omega;
  for (auto& c : out.jordan_blocks) c.eigenvalue -= omega;
  return out;
}

StateVector semigroup_on_chain(const JordanChain& chain, const StateVector& y,
                               double t) {
  if (y.size() != chain.length)
    throw std::invalid_argument("chain state has wrong dimension");
  const Complex growth = std::exp(chain.eigenvalue * t);
  StateVector out(chain.length);
  for (int k = 0; k < chain.length; ++k) {
    Complex acc = 0.0;
    double term = 1.0;  // (-t)^n / n!
    for (int n = 0; k + n < chain.length; ++n) {
      acc += term * y[k + n];
      term *= -t / (n + 1);
    }
    out[k] = growth * acc;
  }
  return out;
}

}  // namespace ncve
