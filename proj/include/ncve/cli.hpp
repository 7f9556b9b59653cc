#pragma once

#include <string>

namespace ncve {

// Entry point shared by tools/main.cpp and the test suite. Parses argv,
// dispatches to one of the commands {parabolic, delay, energy-sweep, loi,
// biorthogonal}, writes reports under --out, and returns the exit code:
//   0  success (including gracefully skipped energy sweeps)
//   1  config or input error
//   2  energy request on a non-diagonalizable coupling
//   3  root search window too small for a certified verdict
//   4  operator inequality violated beyond tolerance
// NCVE_LOG=error|info|debug selects stderr verbosity.
int run_cli(int argc, const char* const* argv);

}  // namespace ncve
