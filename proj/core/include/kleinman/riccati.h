#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kleinman/config.h"
#include "kleinman/operator_core.h"

namespace kleinman {

/// x' = A x + B u, y = C x with A n x n, B n x m, C p x n.
class StateSpaceSystem {
 public:
  StateSpaceSystem(Matrix a, Matrix b, Matrix c);

  const Matrix& a() const { return a_; }
  const Matrix& b() const { return b_; }
  const Matrix& c() const { return c_; }
  Eigen::Index n() const { return a_.rows(); }
  Eigen::Index m() const { return b_.cols(); }
  Eigen::Index p() const { return c_.rows(); }

  /// N = B B^T
  const SymOperator& n_op() const { return n_op_; }
  /// Q = C^T C
  const SymOperator& q_op() const { return q_op_; }

 private:
  Matrix a_, b_, c_;
  SymOperator n_op_, q_op_;
};

/// Why the Newton iteration stopped.
enum class StopReason {
  kResidual,    ///< ||F(P_n)||_F <= rel_tol (1 + ||Q||_F)
  kStep,        ///< ||P_n - P_n+1||_F <= step_tol ||P_n||_F
  kStagnation,  ///< step <= 1e-8 ||P_n||_F and the residual stopped halving
};

std::string_view to_string(StopReason reason);

/// True when the latest step is tiny and the residual no longer halves: the
/// iterate is at the rounding floor of F, which can sit above the absolute
/// residual tolerance when ||P|| is large.
bool newton_stagnated(double step, double p_norm, double residual,
                      double previous_residual);

struct RiccatiSolution {
  SymOperator p;
  Matrix k;  ///< B^T P
  double closed_loop_abscissa = 0.0;
  double residual = 0.0;           ///< ||F(P)||_F
  double relative_residual = 0.0;  ///< see relative_riccati_residual
  std::optional<double> kappa;     ///< unset when n > kKronMaxDim
  int iterations = 0;
  StopReason stop_reason = StopReason::kResidual;
};

/// One row per iterate P_n. step_gap is lambda_min(P_n - P_{n+1}) and is NaN
/// on the final row; error_to_oracle is NaN when the oracle is off;
/// supersolution_defect is NaN on row 0.
struct IterationStep {
  int step = 0;
  double residual = 0.0;
  double step_gap = 0.0;
  double abscissa = 0.0;
  double error_to_oracle = 0.0;
  double supersolution_defect = 0.0;
};

struct IterationTrace {
  std::vector<IterationStep> steps;
};

struct NewtonKleinmanResult {
  RiccatiSolution solution;
  IterationTrace trace;
  std::vector<SymOperator> iterates;  ///< P_0, P_1, ..., P_final
};

/// Rank test rank[A - lambda I | B] = n for every eigenvalue with
/// Re(lambda) >= -margin, singular-value threshold 1e-10 ||A||_2.
bool hautus_stabilizable(const Eigen::Ref<const Matrix>& a,
                         const Eigen::Ref<const Matrix>& b);

/// hautus_stabilizable(A^T, C^T).
bool hautus_detectable(const Eigen::Ref<const Matrix>& c,
                       const Eigen::Ref<const Matrix>& a);

/// Stabilizing gain K (m x n). Returns zero for stable A; otherwise the Bass
/// construction with beta = 1.1 (||A||_F + 1), falling back to stabilizing
/// only the unstable Schur block. Throws kNotStabilizable or
/// kStabilizationFailed.
Matrix stabilize(const Eigen::Ref<const Matrix>& a,
                 const Eigen::Ref<const Matrix>& b);

/// P0 solving (A - BK)^T P0 + P0 (A - BK) = -(C^T C + K^T K); verifies that
/// A - B B^T P0 is stable.
SymOperator initial_guess(const StateSpaceSystem& sys,
                          const Eigen::Ref<const Matrix>& k);

/// F(P) = A^T P + P A - P N P + Q.
Matrix riccati_map(const StateSpaceSystem& sys, const SymOperator& p);

/// ||F(P)||_F
double riccati_residual(const StateSpaceSystem& sys, const SymOperator& p);

/// ||F(P)||_F / (1 + ||Q||_F + 2 ||A||_F ||P||_F + ||N||_F ||P||_F^2).
double relative_riccati_residual(const StateSpaceSystem& sys,
                                 const SymOperator& p);

/// Kleinman-Newton iteration
///   (A - N P_n)^T P_{n+1} + P_{n+1} (A - N P_n) = -Q - P_n N P_n.
NewtonKleinmanResult newton_kleinman(const StateSpaceSystem& sys,
                                     const SymOperator& p0,
                                     const SolverConfig& cfg = {});

/// Stabilizing solution from the stable invariant subspace of the
/// Hamiltonian [[A, -N], [-Q, -A^T]]; independent of the Newton path.
SymOperator hamiltonian_oracle(const StateSpaceSystem& sys);

/// ||(L_{A_cl})^{-1}||_2 for the Lyapunov generator of a_cl, by power
/// iteration on G^{-T} G^{-1} using Schur solves.
double lyapunov_inverse_norm(const Eigen::Ref<const Matrix>& a_cl,
                             std::uint64_t seed = 0);

/// kappa = ||(L_{A - N P})^{-1}||_2 ||B||_2^2; nullopt when n > kKronMaxDim.
std::optional<double> quadratic_convergence_constant(
    const StateSpaceSystem& sys, const SymOperator& p);

struct QuadraticConvergenceReport {
  bool applicable = false;  ///< >= 3 rows with oracle errors
  bool passed = true;
  int checked = 0;          ///< in-basin steps above the noise floor
  int outside_basin = 0;    ///< e_n > 1/(2 kappa), informational
  int below_floor = 0;      ///< e_{n+1} at oracle resolution, informational
  double worst_ratio = 0.0; ///< max e_{n+1} / (kappa e_n^2) over checked steps
  double noise_floor = 0.0;
};

/// Checks e_{n+1} <= kappa e_n^2 (1 + 0.5) wherever e_n <= 1/(2 kappa).
QuadraticConvergenceReport quadratic_convergence_check(
    const IterationTrace& trace, const SymOperator& p_ref, double kappa);

/// K with B K = 0 (+) (A_plus + I) for A = diag(A_minus, A_plus), so that
/// A - B K = diag(A_minus, -I). Throws kRangeConditionFailed.
Matrix dichotomous_gain(const Eigen::Ref<const Matrix>& a_minus,
                        const Eigen::Ref<const Matrix>& a_plus,
                        const Eigen::Ref<const Matrix>& b);

struct RiccatiPipelineResult {
  Matrix initial_gain;
  SymOperator p0;
  NewtonKleinmanResult newton;
  std::optional<SymOperator> oracle;
};

/// Hautus checks -> stabilize (unless k0 given) -> initial_guess ->
/// newton_kleinman.
RiccatiPipelineResult solve_riccati(const StateSpaceSystem& sys,
                                    const SolverConfig& cfg = {},
                                    const std::optional<Matrix>& k0 = {});

}  // namespace kleinman
