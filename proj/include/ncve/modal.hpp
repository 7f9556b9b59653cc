#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ncve/types.hpp"

namespace ncve {

// One diagonal mode y_n' = lambda y_n + coeff * u.
struct Mode {
  Complex eigenvalue;
  Complex coeff;
  std::string label;
};

// Generalized eigenvector chain of a single eigenvalue. The restriction of
// the generator to the chain basis {y_0, ..., y_{length-1}} acts as
// A y_0 = lambda y_0 and A y_k = lambda y_k - y_{k-1} for k >= 1.
struct JordanChain {
  Complex eigenvalue;
  int length = 1;
};

struct ModalSystem {
  std::vector<Mode> modes;
  std::optional<double> omega;  // regularization shift, if one was chosen
  std::vector<JordanChain> jordan_blocks;
};

// Throws std::invalid_argument on duplicate eigenvalues among diagonal modes
// and NonFiniteEntry on non-finite data.
void validate(const ModalSystem& sys);

double spectral_bound(const ModalSystem& sys);

// Same system with every eigenvalue replaced by lambda - omega.
ModalSystem spectral_shift(const ModalSystem& sys, Complex omega);

// exp(A t) applied to chain coordinates y (size chain.length).
StateVector semigroup_on_chain(const JordanChain& chain, const StateVector& y,
                               double t);

}  // namespace ncve
