#include "kleinman/riccati.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "kleinman/lyapunov.h"
#include "kleinman/semigroup.h"
#include "schur.h"

namespace kleinman {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kResidual: return "residual";
    case StopReason::kStep: return "step";
    case StopReason::kStagnation: return "stagnation";
  }
  return "unknown";
}

bool newton_stagnated(double step, double p_norm, double residual,
                      double previous_residual) {
  return step <= 1e-8 * p_norm && residual > 0.5 * previous_residual;
}

void SolverConfig::validate() const {
  if (!(rel_tol > 0.0) || !(step_tol > 0.0) || !(mon_tol > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("tolerances must be positive (tol={}, step-tol={}, "
                            "mon-tol={})",
                            rel_tol, step_tol, mon_tol));
  }
  if (max_iter < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("max-iter must be >= 1, got {}", max_iter));
  }
}

StateSpaceSystem::StateSpaceSystem(Matrix a, Matrix b, Matrix c)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)) {
  const Eigen::Index n = a_.rows();
  require_shape(a_, n, n, "A");
  if (b_.rows() != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("B has {} rows, expected n={}", b_.rows(), n));
  }
  if (c_.cols() != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("C has {} columns, expected n={}", c_.cols(), n));
  }
  require_finite(a_, "A");
  require_finite(b_, "B");
  require_finite(c_, "C");
  n_op_ = SymOperator::symmetrized(b_ * b_.transpose());
  q_op_ = SymOperator::symmetrized(c_.transpose() * c_);
}

bool hautus_stabilizable(const Eigen::Ref<const Matrix>& a,
                         const Eigen::Ref<const Matrix>& b) {
  const Eigen::Index n = a.rows();
  require_shape(a, n, n, "A");
  if (b.rows() != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("B has {} rows, expected {}", b.rows(), n));
  }
  if (n == 0) return true;
  Eigen::EigenSolver<Matrix> es(a, false);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::kEigensolverFailure,
                "nonsymmetric eigensolver did not converge");
  }
  const double norm_a = spectral_norm(a);
  const double margin = 1e-9 * std::max(1.0, norm_a);
  const double threshold =
      1e-10 * std::max(norm_a, std::numeric_limits<double>::min());
  using CMatrix = Eigen::MatrixXcd;
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> lambda = es.eigenvalues()(i);
    if (lambda.real() < -margin) continue;
    CMatrix pencil(n, n + b.cols());
    pencil.leftCols(n) = a.cast<std::complex<double>>() -
                         lambda * CMatrix::Identity(n, n);
    pencil.rightCols(b.cols()) = b.cast<std::complex<double>>();
    Eigen::JacobiSVD<CMatrix> svd(pencil);
    const auto& sv = svd.singularValues();
    const Eigen::Index rank = (sv.array() > threshold).count();
    if (rank < n) return false;
  }
  return true;
}

bool hautus_detectable(const Eigen::Ref<const Matrix>& c,
                       const Eigen::Ref<const Matrix>& a) {
  return hautus_stabilizable(a.transpose(), c.transpose());
}

namespace {

bool closed_loop_stable(const Eigen::Ref<const Matrix>& a,
                        const Eigen::Ref<const Matrix>& b,
                        const Eigen::Ref<const Matrix>& k) {
  return spectral_abscissa(a - b * k).is_stable;
}

// K = B^T pinv(Z), (A + beta I) Z + Z (A + beta I)^T = 2 B B^T.
Matrix bass_gain(const Eigen::Ref<const Matrix>& a,
                 const Eigen::Ref<const Matrix>& b) {
  const Eigen::Index n = a.rows();
  const double beta = 1.1 * (a.norm() + 1.0);
  const Matrix shifted = a + beta * Matrix::Identity(n, n);
  const SymOperator z = solve_lyapunov(
      -shifted.transpose(), SymOperator::symmetrized(2.0 * b * b.transpose()));
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(z.matrix());
  cod.setThreshold(1e-12);
  return b.transpose() * cod.pseudoInverse();
}

}  // namespace

Matrix stabilize(const Eigen::Ref<const Matrix>& a,
                 const Eigen::Ref<const Matrix>& b) {
  const Eigen::Index n = a.rows();
  require_shape(a, n, n, "A");
  if (b.rows() != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("B has {} rows, expected {}", b.rows(), n));
  }
  const StabilityReport open_loop = spectral_abscissa(a);
  if (open_loop.is_stable) return Matrix::Zero(b.cols(), n);
  if (!hautus_stabilizable(a, b)) {
    throw Error(ErrorCode::kNotStabilizable,
                "(A, B) fails the Hautus stabilizability test");
  }

  Matrix k = bass_gain(a, b);
  if (k.allFinite() && closed_loop_stable(a, b, k)) return k;

  // Stabilize only the unstable block of an ordered real Schur form:
  // U^T (A - B K2 U2^T) U = [[T11, *], [0, T22 - U2^T B K2]].
  const double margin = open_loop.margin;
  const detail::OrderedSchur schur = detail::ordered_real_schur(
      a, [margin](std::complex<double> l) { return l.real() < -margin; });
  const Eigen::Index unstable = n - schur.selected;
  const Matrix u2 = schur.u.rightCols(unstable);
  const Matrix t22 = schur.t.bottomRightCorner(unstable, unstable);
  const Matrix k2 = bass_gain(t22, u2.transpose() * b);
  k = k2 * u2.transpose();
  if (k.allFinite() && closed_loop_stable(a, b, k)) return k;

  throw Error(ErrorCode::kStabilizationFailed,
              "Bass gain and Schur-block fallback both failed verification");
}

SymOperator initial_guess(const StateSpaceSystem& sys,
                          const Eigen::Ref<const Matrix>& k) {
  require_shape(k, sys.m(), sys.n(), "K");
  const Matrix a_bk = sys.a() - sys.b() * k;
  if (!spectral_abscissa(a_bk).is_stable) {
    throw Error(ErrorCode::kInitialGuessNotStabilizing,
                "A - B K is not stable");
  }
  const SymOperator rhs =
      sys.q_op() + SymOperator::symmetrized(k.transpose() * k);
  SymOperator p0 = solve_lyapunov(a_bk, rhs);
  const StabilityReport cl =
      spectral_abscissa(sys.a() - sys.n_op().matrix() * p0.matrix());
  if (!cl.is_stable) {
    throw Error(ErrorCode::kInitialGuessNotStabilizing,
                fmt::format("A - B B^T P0 has abscissa {:.3e}", cl.abscissa));
  }
  return p0;
}

Matrix riccati_map(const StateSpaceSystem& sys, const SymOperator& p) {
  require_shape(p.matrix(), sys.n(), sys.n(), "P");
  const Matrix& pm = p.matrix();
  const Matrix ap = sys.a().transpose() * pm;
  return ap + ap.transpose() - pm * sys.n_op().matrix() * pm +
         sys.q_op().matrix();
}

double riccati_residual(const StateSpaceSystem& sys, const SymOperator& p) {
  return riccati_map(sys, p).norm();
}

namespace {

double residual_scale(const StateSpaceSystem& sys, const SymOperator& p) {
  const double np = p.matrix().norm();
  return 1.0 + sys.q_op().matrix().norm() + 2.0 * sys.a().norm() * np +
         sys.n_op().matrix().norm() * np * np;
}

}  // namespace

double relative_riccati_residual(const StateSpaceSystem& sys,
                                 const SymOperator& p) {
  return riccati_residual(sys, p) / residual_scale(sys, p);
}

NewtonKleinmanResult newton_kleinman(const StateSpaceSystem& sys,
                                     const SymOperator& p0,
                                     const SolverConfig& cfg) {
  cfg.validate();
  require_shape(p0.matrix(), sys.n(), sys.n(), "P0");
  if (!is_psd(p0)) {
    throw Error(ErrorCode::kNotPsd, "initial guess P0 is not PSD");
  }
  const Matrix& a = sys.a();
  const Matrix& n_mat = sys.n_op().matrix();
  const Matrix& q_mat = sys.q_op().matrix();
  const double stop_residual = cfg.rel_tol * (1.0 + q_mat.norm());
  const double quad_sign =
      cfg.fault == FaultInjection::kFlipQuadraticTerm ? -1.0 : 1.0;

  std::optional<SymOperator> oracle;
  if (cfg.oracle) oracle = hamiltonian_oracle(sys);
  auto oracle_error = [&](const SymOperator& p) {
    return oracle ? (p.matrix() - oracle->matrix()).norm() : kNaN;
  };

  NewtonKleinmanResult result;
  auto& steps = result.trace.steps;

  SymOperator p = p0;
  StabilityReport cl = spectral_abscissa(a - n_mat * p.matrix());
  if (!cl.is_stable) {
    throw Error(ErrorCode::kInitialGuessNotStabilizing,
                fmt::format("A - B B^T P0 has abscissa {:.3e}", cl.abscissa));
  }
  steps.push_back({0, riccati_residual(sys, p), kNaN, cl.abscissa,
                   oracle_error(p), kNaN});
  result.iterates.push_back(p);

  bool converged = steps.back().residual <= stop_residual;
  StopReason stop = StopReason::kResidual;
  double mon_scale = 0.0;
  int iter = 0;
  while (!converged) {
    if (iter >= cfg.max_iter) {
      throw Error(ErrorCode::kMaxIterExceeded,
                  fmt::format("no convergence after {} iterations (residual "
                              "{:.3e})",
                              iter, steps.back().residual));
    }
    ++iter;
    const Matrix a_cl = a - n_mat * p.matrix();
    const Matrix pnp = p.matrix() * n_mat * p.matrix();
    const SymOperator rhs = SymOperator::symmetrized(q_mat + quad_sign * pnp);
    const SymOperator next = solve_lyapunov(a_cl, rhs, cfg.method);

    const SymOperator diff = p - next;
    steps.back().step_gap = lambda_min(diff);
    if (iter == 1) mon_scale = 1.0 + spectral_norm(next.matrix());
    if (iter >= 2 && steps.back().step_gap < -cfg.mon_tol * mon_scale) {
      throw Error(ErrorCode::kMonotonicityViolated,
                  fmt::format("lambda_min(P_{} - P_{}) = {:.3e}", iter - 1,
                              iter, steps.back().step_gap));
    }

    // F(P_{n+1}) = -(P_n - P_{n+1}) N (P_n - P_{n+1}).
    const Matrix f_next = riccati_map(sys, next);
    const Matrix psi = diff.matrix() * n_mat * diff.matrix();
    const double defect = (f_next + psi).norm() / residual_scale(sys, next);

    cl = spectral_abscissa(a - n_mat * next.matrix());
    if (!cl.is_stable) {
      throw Error(ErrorCode::kIterateNotStabilizing,
                  fmt::format("A - B B^T P_{} has abscissa {:.3e}", iter,
                              cl.abscissa));
    }
    const double residual = f_next.norm();
    steps.push_back(
        {iter, residual, kNaN, cl.abscissa, oracle_error(next), defect});

    const double step = diff.matrix().norm();
    const double p_norm = p.matrix().norm();
    const double previous_residual = steps[steps.size() - 2].residual;
    if (residual <= stop_residual) {
      converged = true;
      stop = StopReason::kResidual;
    } else if (step <= cfg.step_tol * p_norm) {
      converged = true;
      stop = StopReason::kStep;
    } else if (newton_stagnated(step, p_norm, residual, previous_residual)) {
      converged = true;
      stop = StopReason::kStagnation;
    }
    p = next;
    result.iterates.push_back(p);
  }

  RiccatiSolution& sol = result.solution;
  sol.p = p;
  sol.k = sys.b().transpose() * p.matrix();
  sol.closed_loop_abscissa = cl.abscissa;
  sol.residual = steps.back().residual;
  sol.relative_residual = relative_riccati_residual(sys, p);
  sol.iterations = iter;
  sol.stop_reason = stop;
  sol.kappa = quadratic_convergence_constant(sys, p);
  return result;
}

SymOperator hamiltonian_oracle(const StateSpaceSystem& sys) {
  if (!hautus_stabilizable(sys.a(), sys.b())) {
    throw Error(ErrorCode::kNotStabilizable,
                "(A, B) fails the Hautus stabilizability test");
  }
  if (!hautus_detectable(sys.c(), sys.a())) {
    throw Error(ErrorCode::kNotDetectable,
                "(C, A) fails the Hautus detectability test");
  }
  const Eigen::Index n = sys.n();
  if (n == 0) return SymOperator::zero(0);
  Matrix h(2 * n, 2 * n);
  h << sys.a(), -sys.n_op().matrix(), -sys.q_op().matrix(),
      -sys.a().transpose();
  const detail::OrderedSchur schur = detail::ordered_real_schur(
      h, [](std::complex<double> l) { return l.real() < 0.0; });
  if (schur.selected != n) {
    throw Error(ErrorCode::kOracleSingular,
                fmt::format("Hamiltonian has {} stable eigenvalues, expected "
                            "{}",
                            schur.selected, n));
  }
  const Matrix u1 = schur.u.topLeftCorner(n, n);
  const Matrix u2 = schur.u.bottomLeftCorner(n, n);
  Eigen::PartialPivLU<Matrix> lu(u1.transpose());
  if (!(lu.rcond() > 1e-14)) {
    throw Error(ErrorCode::kOracleSingular,
                fmt::format("U1 is singular to working precision (rcond "
                            "{:.3e})",
                            lu.rcond()));
  }
  // P U1 = U2  <=>  U1^T P^T = U2^T
  const Matrix p = lu.solve(u2.transpose()).transpose();
  SymOperator sol = SymOperator::symmetrized(p);
  if (!is_psd(sol)) {
    throw Error(ErrorCode::kConeViolation, "oracle solution is not PSD");
  }
  const double rel = relative_riccati_residual(sys, sol);
  if (!(rel <= 1e-8)) {
    throw Error(ErrorCode::kResidualTooLarge,
                fmt::format("oracle relative residual {:.3e} exceeds 1e-8",
                            rel));
  }
  return sol;
}

double lyapunov_inverse_norm(const Eigen::Ref<const Matrix>& a_cl,
                             std::uint64_t seed) {
  const Eigen::Index n = a_cl.rows();
  if (n == 0) return 0.0;
  // G^{-1}: solve A^T X + X A = R. G^{-T}: solve A X + X A^T = R.
  const SchurLyapunovSolver forward(a_cl);
  const SchurLyapunovSolver adjoint(a_cl.transpose());

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix v(n, n);
  for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = normal(rng);
  v /= v.norm();

  double sigma_sq = 0.0;
  for (int it = 0; it < 1000; ++it) {
    const Matrix w = adjoint.solve(forward.solve(v));
    const double next = w.norm();
    v = w / next;
    const bool done = std::abs(next - sigma_sq) <= 1e-13 * next;
    sigma_sq = next;
    if (done) break;
  }
  return std::sqrt(sigma_sq);
}

std::optional<double> quadratic_convergence_constant(
    const StateSpaceSystem& sys, const SymOperator& p) {
  if (sys.n() > kKronMaxDim) return std::nullopt;
  const Matrix a_cl = sys.a() - sys.n_op().matrix() * p.matrix();
  const double norm_b = spectral_norm(sys.b());
  return lyapunov_inverse_norm(a_cl) * norm_b * norm_b;
}

QuadraticConvergenceReport quadratic_convergence_check(
    const IterationTrace& trace, const SymOperator& p_ref, double kappa) {
  QuadraticConvergenceReport report;
  const auto& steps = trace.steps;
  const auto with_error =
      std::count_if(steps.begin(), steps.end(), [](const IterationStep& s) {
        return std::isfinite(s.error_to_oracle);
      });
  if (with_error < 3 || !(kappa > 0.0)) {
    // Fewer than three measured errors: either converged immediately (a
    // vacuous pass) or no oracle.
    report.applicable = with_error >= 3;
    return report;
  }
  report.applicable = true;
  const double last = steps.back().error_to_oracle;
  report.noise_floor =
      std::max(10.0 * last, 1e-12 * (1.0 + p_ref.matrix().norm()));
  const double basin = 1.0 / (2.0 * kappa);
  for (size_t i = 0; i + 1 < steps.size(); ++i) {
    const double e = steps[i].error_to_oracle;
    const double e_next = steps[i + 1].error_to_oracle;
    if (e > basin) {
      ++report.outside_basin;
      continue;
    }
    if (e_next <= report.noise_floor) {
      ++report.below_floor;
      continue;
    }
    ++report.checked;
    const double ratio = e_next / (kappa * e * e);
    report.worst_ratio = std::max(report.worst_ratio, ratio);
    if (ratio > 1.5) report.passed = false;
  }
  return report;
}

Matrix dichotomous_gain(const Eigen::Ref<const Matrix>& a_minus,
                        const Eigen::Ref<const Matrix>& a_plus,
                        const Eigen::Ref<const Matrix>& b) {
  const Eigen::Index n_minus = a_minus.rows(), n_plus = a_plus.rows();
  require_shape(a_minus, n_minus, n_minus, "A_minus");
  require_shape(a_plus, n_plus, n_plus, "A_plus");
  const Eigen::Index n = n_minus + n_plus;
  if (b.rows() != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("B has {} rows, expected {}", b.rows(), n));
  }
  if (n_minus > 0 && !spectral_abscissa(a_minus).is_stable) {
    throw Error(ErrorCode::kInvalidArgument, "A_minus is not stable");
  }
  if (n_plus == 0) return Matrix::Zero(b.cols(), n);

  Matrix target = Matrix::Zero(n, n);
  const Matrix shifted = a_plus + Matrix::Identity(n_plus, n_plus);
  target.bottomRightCorner(n_plus, n_plus) = shifted;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(b);
  const Matrix k = cod.solve(target);
  const double residual = (b * k - target).norm();
  if (residual > 1e-10 * shifted.norm()) {
    throw Error(ErrorCode::kRangeConditionFailed,
                fmt::format("X_+ not in Ran B: ||B K - target||_F = {:.3e}",
                            residual));
  }
  return k;
}

RiccatiPipelineResult solve_riccati(const StateSpaceSystem& sys,
                                    const SolverConfig& cfg,
                                    const std::optional<Matrix>& k0) {
  cfg.validate();
  if (!hautus_stabilizable(sys.a(), sys.b())) {
    throw Error(ErrorCode::kNotStabilizable,
                "(A, B) fails the Hautus stabilizability test");
  }
  if (!hautus_detectable(sys.c(), sys.a())) {
    throw Error(ErrorCode::kNotDetectable,
                "(C, A) fails the Hautus detectability test");
  }
  RiccatiPipelineResult out;
  out.initial_gain = k0 ? *k0 : stabilize(sys.a(), sys.b());
  out.p0 = initial_guess(sys, out.initial_gain);
  out.newton = newton_kleinman(sys, out.p0, cfg);
  if (cfg.oracle) out.oracle = hamiltonian_oracle(sys);
  return out;
}

}  // namespace kleinman
