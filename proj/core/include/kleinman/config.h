#pragma once

#include <cstdint>

#include "kleinman/lyapunov.h"

namespace kleinman {

/// Deliberate defects for mutation testing of the certification suites.
/// Never set outside tests.
enum class FaultInjection {
  kNone,
  /// Flips the sign of the P_n N P_n term on the Newton right-hand side.
  kFlipQuadraticTerm,
};

struct SolverConfig {
  double rel_tol = 1e-10;   ///< residual stop: ||F(P)||_F <= rel_tol (1 + ||Q||_F)
  double step_tol = 1e-12;  ///< step stop: ||P_n - P_n+1||_F <= step_tol ||P_n||_F
  double mon_tol = 1e-8;    ///< monotonicity slack relative to 1 + ||P_1||_2
  int max_iter = 60;
  LyapunovMethod method = LyapunovMethod::kSchur;
  bool oracle = false;      ///< compare iterates against the Hamiltonian oracle
  std::uint64_t seed = 0;
  FaultInjection fault = FaultInjection::kNone;

  /// Throws kInvalidArgument on non-positive tolerances or max_iter < 1.
  void validate() const;
};

}  // namespace kleinman
