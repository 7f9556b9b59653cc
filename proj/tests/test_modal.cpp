#include <doctest.h>

#include "ncve/modal.hpp"
#include "oracles.hpp"

using namespace ncve;

namespace {

Eigen::MatrixXcd chain_matrix(const JordanChain& c) {
  Eigen::MatrixXcd A =
      Eigen::MatrixXcd::Zero(c.length, c.length);
  for (int k = 0; k < c.length; ++k) {
    A(k, k) = c.eigenvalue;
    if (k > 0) A(k - 1, k) = -1.0;
  }
  return A;
}

}  // namespace

TEST_CASE("cexpm1 agrees with direct evaluation away from zero") {
  for (Complex w : {Complex(1.3, -2.1), Complex(-4.0, 0.5), Complex(0.0, 3.0),
                    Complex(6.0, -1.0)}) {
    const Complex direct = std::exp(w) - 1.0;
    CHECK(std::abs(cexpm1(w) - direct) <= 1e-14 * (1 + std::abs(direct)));
  }
}

TEST_CASE("cexpm1 keeps precision for tiny arguments") {
  const Complex w(3e-9, -4e-9);
  const Complex series = w + w * w / 2.0 + w * w * w / 6.0;
  CHECK(std::abs(cexpm1(w) - series) <= 1e-15 * std::abs(series));
}

TEST_CASE("exp_integral matches quadrature") {
  for (Complex z : {Complex(0.0, 0.0), Complex(2.5, 0.0), Complex(-1.0, 3.0),
                    Complex(1e-9, -1e-9), Complex(-40.0, 7.0)}) {
    for (double T : {0.5, 1.0, 4.0}) {
      const Complex ref = oracle::integrate(
          [&](double s) { return std::exp(-z * s); }, 0.0, T);
      CHECK(std::abs(exp_integral(z, T) - ref) <=
            1e-12 * (1 + std::abs(ref)));
    }
  }
}

TEST_CASE("chain semigroup matches dense matrix exponential") {
  const JordanChain chain{Complex(-0.4, 1.7), 4};
  std::mt19937_64 rng(11);
  const StateVector y = oracle::random_complex_vector(rng, 4);
  for (double t : {0.1, 0.9, 2.7}) {
    const StateVector got = semigroup_on_chain(chain, y, t);
    const StateVector ref = oracle::expm(chain_matrix(chain) * t) * y;
    CHECK((got - ref).norm() <= 1e-12 * (1 + ref.norm()));
  }
}

TEST_CASE("chain semigroup satisfies the group law") {
  const JordanChain chain{Complex(0.7, -1.1), 3};
  std::mt19937_64 rng(12);
  const StateVector y = oracle::random_complex_vector(rng, 3);
  for (auto [t, s] : {std::pair{0.5, 1.25}, {2.0, 3.0}, {4.0, 3.5}}) {
    const StateVector once = semigroup_on_chain(chain, y, t + s);
    const StateVector twice =
        semigroup_on_chain(chain, semigroup_on_chain(chain, y, s), t);
    CHECK((once - twice).norm() <= 1e-12 * (1 + once.norm()));
  }
}

TEST_CASE("spectral bound covers modes and chains") {
  ModalSystem sys;
  sys.modes = {{Complex(-2.0, 5.0), 1.0, ""}, {Complex(-0.5, 0.0), 1.0, ""}};
  sys.jordan_blocks = {{Complex(0.25, -1.0), 2}};
  CHECK(spectral_bound(sys) == doctest::Approx(0.25));
}

TEST_CASE("spectral shift composes additively") {
  ModalSystem sys;
  sys.modes = {{Complex(1.0, 2.0), 1.0, ""}, {Complex(-3.0, 0.0), 2.0, ""}};
  const Complex a(0.7, -0.2), b(1.1, 0.4);
  const ModalSystem once = spectral_shift(sys, a + b);
  const ModalSystem twice = spectral_shift(spectral_shift(sys, a), b);
  for (size_t i = 0; i < sys.modes.size(); ++i)
    CHECK(std::abs(once.modes[i].eigenvalue - twice.modes[i].eigenvalue) <=
          1e-15);
  CHECK(spectral_bound(once) ==
        doctest::Approx(spectral_bound(sys) - (a + b).real()));
}

TEST_CASE("validation rejects duplicates and non-finite data") {
  ModalSystem dup;
  dup.modes = {{Complex(1.0, 0.0), 1.0, ""}, {Complex(1.0, 0.0), 2.0, ""}};
  CHECK_THROWS_AS(validate(dup), std::invalid_argument);

  ModalSystem bad;
  bad.modes = {{Complex(std::nan(""), 0.0), 1.0, ""}};
  CHECK_THROWS_AS(validate(bad), NonFiniteEntry);

  ModalSystem ok;
  ok.modes = {{Complex(1.0, 0.0), 1.0, ""}, {Complex(1.0, 1e-3), 2.0, ""}};
  CHECK_NOTHROW(validate(ok));
}
