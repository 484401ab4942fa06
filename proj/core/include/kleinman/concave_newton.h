#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "kleinman/config.h"
#include "kleinman/operator_core.h"
#include "kleinman/riccati.h"
#include "kleinman/semigroup.h"

namespace kleinman {

using SymMap = std::function<SymOperator(const SymOperator&)>;
using SymBilinearMap =
    std::function<SymOperator(const SymOperator&, const SymOperator&)>;

/// F(x) = Ax + Phi(x) = 0 on symmetric n x n matrices ordered by the PSD cone,
/// with Phi order-concave. All callables must be free of side effects.
///
/// The engine checks per-step stability of F'(x_n); global detectability of
/// (A, Phi) is the caller's responsibility.
struct ConcaveProblem {
  Eigen::Index dim = 0;
  SymMap linear;        ///< A
  SymMap phi;           ///< Phi
  SymBilinearMap dphi;  ///< (x, y) -> Phi'(x) y

  /// y with F'(x) y = rhs. When unset, F'(x) is assembled on an orthonormal
  /// basis of the n(n+1)/2-dimensional symmetric space and solved densely.
  std::function<SymOperator(const SymOperator& x, const SymOperator& rhs)>
      solve_linearized;
  /// Stability of F'(x). When unset, eigenvalues of the assembled matrix.
  std::function<StabilityReport(const SymOperator& x)> linearization_stability;

  ConeTolerances cone_tol;
  /// Subsolution theta: the engine then solves
  /// A(x + theta) + Phi(x + theta) = 0 for x >= 0 and returns x + theta.
  std::optional<SymOperator> shift;
};

/// L(x) = Phi(x) - Phi'(x) x and Psi(x, y) = Phi(x) - Phi(y) + Phi'(x)(y - x).
struct AuxMaps {
  static SymOperator l(const ConcaveProblem& prob, const SymOperator& x);
  static SymOperator psi(const ConcaveProblem& prob, const SymOperator& x,
                         const SymOperator& y);
};

/// F(x) = A x + Phi(x).
SymOperator concave_map(const ConcaveProblem& prob, const SymOperator& x);

/// Matrix of F'(x) = A + Phi'(x) in the orthonormal basis
/// {e_i e_i^T} u {(e_i e_j^T + e_j e_i^T)/sqrt(2), i < j}.
Matrix assemble_linearization(const ConcaveProblem& prob,
                              const SymOperator& x);

/// Coordinates of a symmetric matrix in that basis, and back.
Vector sym_to_coords(const SymOperator& x);
SymOperator coords_to_sym(const Eigen::Ref<const Vector>& v, Eigen::Index n);

struct NewtonStepResult {
  SymOperator y;
  double linearization_abscissa = 0.0;
  /// ||F(y) + Psi(x, y)||_F / (1 + ||A y||_F + ||Phi(y)||_F)
  double supersolution_defect = 0.0;
  bool checked_decrease = false;  ///< F(x) <= 0 held, so y <= x was checked
};

/// One step: y solves F'(x) y = -L(x). Verifies F'(x) stable
/// (kLinearizationUnstable), y >= 0 and Psi(x, y) >= 0 (kConeViolation),
/// F(y) = -Psi(x, y) to 1e-9 relative (kResidualTooLarge), and y <= x when
/// F(x) <= 0 (kMonotonicityViolated).
NewtonStepResult newton_step_checked(const ConcaveProblem& prob,
                                     const SymOperator& x);

SymOperator newton_step(const ConcaveProblem& prob, const SymOperator& x);

struct ConcaveSolveResult {
  SymOperator x;
  IterationTrace trace;
  std::vector<SymOperator> iterates;  ///< x_0, x_1, ..., x_final
  int iterations = 0;
  double residual = 0.0;  ///< ||F(x)||_F
};

/// Iterates x_{n+1} = newton_step(x_n) from x0 >= 0 with F'(x0) stable.
/// Stops when ||F(x_n)||_F <= rel_tol (1 + ||Phi(0)||_F) or
/// ||x_n - x_{n+1}||_F <= step_tol ||x_n||_F, or on stagnation as in
/// newton_kleinman. Requires Phi(0) >= 0. Trace
/// abscissa is that of F'(x_n).
ConcaveSolveResult newton_solve(const ConcaveProblem& prob,
                                const SymOperator& x0,
                                const SolverConfig& cfg = {});

/// Smallest eigenvalue of Psi(x, y) over `samples` random PSD pairs; the
/// concavity witness is nonnegative up to tolerance.
double sample_concavity(const ConcaveProblem& prob, int samples,
                        std::uint64_t seed);

/// Riccati map as a concave problem: A P = A^T P + P A,
/// Phi(P) = -P N P + Q, Phi'(P) R = -(R N P + P N R). Linear solves and
/// stability use the Lyapunov machinery for A - N P.
ConcaveProblem riccati_instance(const StateSpaceSystem& sys,
                                LyapunovMethod method = LyapunovMethod::kSchur);

/// P >= 0 with P N P + 2 a P = Q, from x0 = Q / (2a). The linear part is the
/// Lyapunov generator of -aI. Throws kNonPositiveA for a <= 0 and kNotPsd if
/// N or Q is not PSD.
ConcaveSolveResult solve_regularized_sqrt(const SymOperator& n,
                                          const SymOperator& q, double a,
                                          const SolverConfig& cfg = {});

}  // namespace kleinman
