#include "kleinman/concave_newton.h"

#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "kleinman/lyapunov.h"
#include "kleinman/random.h"

namespace kleinman {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kSupersolutionTol = 1e-9;

void require_callables(const ConcaveProblem& prob) {
  if (!prob.linear || !prob.phi || !prob.dphi) {
    throw Error(ErrorCode::kInvalidArgument,
                "concave problem needs linear, phi and dphi");
  }
}

void require_dim(const ConcaveProblem& prob, const SymOperator& x,
                 std::string_view what) {
  if (x.dim() != prob.dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("{} has dimension {}, problem has {}", what,
                            x.dim(), prob.dim));
  }
}

SymOperator linearization_apply(const ConcaveProblem& prob,
                                const SymOperator& x, const SymOperator& y) {
  return prob.linear(y) + prob.dphi(x, y);
}

StabilityReport linearization_stability(const ConcaveProblem& prob,
                                        const SymOperator& x) {
  if (prob.linearization_stability) return prob.linearization_stability(x);
  return spectral_abscissa(assemble_linearization(prob, x));
}

SymOperator solve_linearized(const ConcaveProblem& prob, const SymOperator& x,
                             const SymOperator& rhs) {
  if (prob.solve_linearized) return prob.solve_linearized(x, rhs);
  Eigen::PartialPivLU<Matrix> lu(assemble_linearization(prob, x));
  return coords_to_sym(lu.solve(sym_to_coords(rhs)), prob.dim);
}

// Rewrites the theta-shifted problem as an unshifted one in x = x~ - theta.
ConcaveProblem unshift(const ConcaveProblem& prob) {
  if (!prob.shift) return prob;
  const SymOperator theta = *prob.shift;
  require_dim(prob, theta, "shift");
  const SymOperator a_theta = prob.linear(theta);
  ConcaveProblem out;
  out.dim = prob.dim;
  out.cone_tol = prob.cone_tol;
  out.linear = prob.linear;
  out.phi = [prob, theta, a_theta](const SymOperator& x) {
    return prob.phi(x + theta) + a_theta;
  };
  out.dphi = [prob, theta](const SymOperator& x, const SymOperator& y) {
    return prob.dphi(x + theta, y);
  };
  if (prob.solve_linearized) {
    out.solve_linearized = [prob, theta](const SymOperator& x,
                                         const SymOperator& rhs) {
      return prob.solve_linearized(x + theta, rhs);
    };
  }
  if (prob.linearization_stability) {
    out.linearization_stability = [prob, theta](const SymOperator& x) {
      return prob.linearization_stability(x + theta);
    };
  }
  return out;
}

}  // namespace

SymOperator AuxMaps::l(const ConcaveProblem& prob, const SymOperator& x) {
  return prob.phi(x) - prob.dphi(x, x);
}

SymOperator AuxMaps::psi(const ConcaveProblem& prob, const SymOperator& x,
                         const SymOperator& y) {
  return prob.phi(x) - prob.phi(y) + prob.dphi(x, y - x);
}

SymOperator concave_map(const ConcaveProblem& prob, const SymOperator& x) {
  return prob.linear(x) + prob.phi(x);
}

Vector sym_to_coords(const SymOperator& x) {
  const Eigen::Index n = x.dim();
  Vector v(n * (n + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    v(k++) = x(j, j);
    for (Eigen::Index i = j + 1; i < n; ++i) v(k++) = std::sqrt(2.0) * x(i, j);
  }
  return v;
}

SymOperator coords_to_sym(const Eigen::Ref<const Vector>& v, Eigen::Index n) {
  if (v.size() != n * (n + 1) / 2) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("{} coordinates do not describe a {}x{} symmetric "
                            "matrix",
                            v.size(), n, n));
  }
  Matrix m(n, n);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    m(j, j) = v(k++);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      m(i, j) = m(j, i) = v(k++) / std::sqrt(2.0);
    }
  }
  return SymOperator::symmetrized(m);
}

Matrix assemble_linearization(const ConcaveProblem& prob,
                              const SymOperator& x) {
  require_callables(prob);
  require_dim(prob, x, "x");
  const Eigen::Index n = prob.dim;
  const Eigen::Index d = n * (n + 1) / 2;
  Matrix out(d, d);
  Vector e = Vector::Zero(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    e(k) = 1.0;
    out.col(k) = sym_to_coords(linearization_apply(prob, x, coords_to_sym(e, n)));
    e(k) = 0.0;
  }
  return out;
}

NewtonStepResult newton_step_checked(const ConcaveProblem& prob,
                                     const SymOperator& x) {
  require_callables(prob);
  require_dim(prob, x, "x");
  const ConeTolerances& tol = prob.cone_tol;

  const StabilityReport stab = linearization_stability(prob, x);
  if (!stab.is_stable) {
    throw Error(ErrorCode::kLinearizationUnstable,
                fmt::format("F'(x) has spectral abscissa {:.3e}",
                            stab.abscissa));
  }

  NewtonStepResult out;
  out.linearization_abscissa = stab.abscissa;
  out.y = solve_linearized(prob, x, AuxMaps::l(prob, x) * -1.0);
  if (!is_psd(out.y, tol)) {
    throw Error(ErrorCode::kConeViolation,
                fmt::format("Newton step left the cone: lambda_min = {:.3e}",
                            lambda_min(out.y)));
  }

  const SymOperator psi = AuxMaps::psi(prob, x, out.y);
  if (!is_psd(psi, tol)) {
    throw Error(ErrorCode::kConeViolation,
                fmt::format("Psi(x, y) is not PSD (lambda_min = {:.3e}); Phi "
                            "is not order-concave here",
                            lambda_min(psi)));
  }
  const SymOperator ay = prob.linear(out.y);
  const SymOperator phi_y = prob.phi(out.y);
  const SymOperator f_y = ay + phi_y;
  out.supersolution_defect =
      (f_y + psi).matrix().norm() /
      (1.0 + ay.matrix().norm() + phi_y.matrix().norm());
  if (out.supersolution_defect > kSupersolutionTol) {
    throw Error(ErrorCode::kResidualTooLarge,
                fmt::format("F(y) + Psi(x, y) = {:.3e} relative exceeds 1e-9",
                            out.supersolution_defect));
  }

  if (is_psd(concave_map(prob, x) * -1.0, tol)) {
    out.checked_decrease = true;
    if (!is_psd(x - out.y, tol)) {
      throw Error(ErrorCode::kMonotonicityViolated,
                  fmt::format("F(x) <= 0 but y is not below x "
                              "(lambda_min(x - y) = {:.3e})",
                              lambda_min(x - out.y)));
    }
  }
  return out;
}

SymOperator newton_step(const ConcaveProblem& prob, const SymOperator& x) {
  return newton_step_checked(prob, x).y;
}

ConcaveSolveResult newton_solve(const ConcaveProblem& prob_in,
                                const SymOperator& x0,
                                const SolverConfig& cfg) {
  cfg.validate();
  require_callables(prob_in);
  require_dim(prob_in, x0, "x0");
  const ConcaveProblem prob = unshift(prob_in);
  const ConeTolerances& tol = prob.cone_tol;
  const SymOperator theta =
      prob_in.shift ? *prob_in.shift : SymOperator::zero(prob.dim);
  // x0 is given in the original coordinates.
  const SymOperator start = x0 - theta;

  const SymOperator phi0 = prob.phi(SymOperator::zero(prob.dim));
  if (!is_psd(phi0, tol)) {
    throw Error(ErrorCode::kConeViolation,
                prob_in.shift ? "shift is not a subsolution: F(theta) is not PSD"
                              : "Phi(0) is not PSD");
  }
  if (!is_psd(start, tol)) {
    throw Error(ErrorCode::kNotPsd, "initial guess is not in the cone");
  }
  const double stop_residual = cfg.rel_tol * (1.0 + phi0.matrix().norm());

  ConcaveSolveResult out;
  auto& steps = out.trace.steps;
  SymOperator x = start;
  double residual = concave_map(prob, x).matrix().norm();
  steps.push_back({0, residual, kNaN, linearization_stability(prob, x).abscissa,
                   kNaN, kNaN});
  out.iterates.push_back(x + theta);

  bool converged = residual <= stop_residual;
  double mon_scale = 0.0;
  int iter = 0;
  while (!converged) {
    if (iter >= cfg.max_iter) {
      throw Error(ErrorCode::kMaxIterExceeded,
                  fmt::format("no convergence after {} iterations (residual "
                              "{:.3e})",
                              iter, residual));
    }
    ++iter;
    const NewtonStepResult step = newton_step_checked(prob, x);
    const SymOperator diff = x - step.y;
    steps.back().step_gap = lambda_min(diff);
    if (iter == 1) mon_scale = 1.0 + spectral_norm(step.y.matrix());
    if (iter >= 2 && steps.back().step_gap < -cfg.mon_tol * mon_scale) {
      throw Error(ErrorCode::kMonotonicityViolated,
                  fmt::format("lambda_min(x_{} - x_{}) = {:.3e}", iter - 1,
                              iter, steps.back().step_gap));
    }
    const double previous_residual = residual;
    residual = concave_map(prob, step.y).matrix().norm();
    steps.push_back({iter, residual, kNaN,
                     linearization_stability(prob, step.y).abscissa, kNaN,
                     step.supersolution_defect});
    const double step_norm = diff.matrix().norm();
    const double x_norm = x.matrix().norm();
    converged = residual <= stop_residual ||
                step_norm <= cfg.step_tol * x_norm ||
                newton_stagnated(step_norm, x_norm, residual,
                                 previous_residual);
    x = step.y;
    out.iterates.push_back(x + theta);
  }

  const StabilityReport final_stab = linearization_stability(prob, x);
  if (!final_stab.is_stable) {
    throw Error(ErrorCode::kLinearizationUnstable,
                fmt::format("limit is not stabilizing: F'(x) has abscissa "
                            "{:.3e}",
                            final_stab.abscissa));
  }
  out.x = x + theta;
  out.iterations = iter;
  out.residual = residual;
  return out;
}

double sample_concavity(const ConcaveProblem& prob, int samples,
                        std::uint64_t seed) {
  require_callables(prob);
  std::mt19937_64 rng(seed);
  double worst = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    const SymOperator x = random_psd(prob.dim, prob.dim, rng);
    const SymOperator y = random_psd(prob.dim, prob.dim, rng);
    const SymOperator psi = AuxMaps::psi(prob, x, y);
    const double scale =
        std::max(1.0, spectral_norm(psi.matrix()));
    worst = std::min(worst, lambda_min(psi) / scale);
  }
  return worst;
}

namespace {

// A P = A^T P + P A, Phi(P) = -P N P + Q. F'(P) is the Lyapunov generator of
// A - N P, whose spectrum is {l_i + l_j}, so its abscissa is twice that of
// A - N P.
ConcaveProblem quadratic_problem(const Matrix& a, const SymOperator& n_op,
                                 const SymOperator& q_op,
                                 LyapunovMethod method) {
  ConcaveProblem prob;
  prob.dim = a.rows();
  const Matrix nm = n_op.matrix();
  prob.linear = [a](const SymOperator& p) {
    const Matrix ap = a.transpose() * p.matrix();
    return SymOperator::symmetrized(ap + ap.transpose());
  };
  prob.phi = [nm, q_op](const SymOperator& p) {
    return SymOperator::symmetrized(q_op.matrix() -
                                    p.matrix() * nm * p.matrix());
  };
  prob.dphi = [nm](const SymOperator& p, const SymOperator& r) {
    const Matrix rnp = r.matrix() * nm * p.matrix();
    return SymOperator::symmetrized(-(rnp + rnp.transpose()));
  };
  prob.solve_linearized = [a, nm, method](const SymOperator& p,
                                          const SymOperator& rhs) {
    return solve_lyapunov(a - nm * p.matrix(), rhs * -1.0, method);
  };
  prob.linearization_stability = [a, nm](const SymOperator& p) {
    StabilityReport r = spectral_abscissa(a - nm * p.matrix());
    r.abscissa *= 2.0;
    r.margin *= 2.0;
    return r;
  };
  return prob;
}

}  // namespace

ConcaveProblem riccati_instance(const StateSpaceSystem& sys,
                                LyapunovMethod method) {
  return quadratic_problem(sys.a(), sys.n_op(), sys.q_op(), method);
}

ConcaveSolveResult solve_regularized_sqrt(const SymOperator& n,
                                          const SymOperator& q, double a,
                                          const SolverConfig& cfg) {
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw Error(ErrorCode::kNonPositiveA,
                fmt::format("regularization a must be positive, got {}", a));
  }
  if (n.dim() != q.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("N is {0}x{0}, Q is {1}x{1}", n.dim(), q.dim()));
  }
  if (!is_psd(n)) throw Error(ErrorCode::kNotPsd, "N is not PSD");
  if (!is_psd(q)) throw Error(ErrorCode::kNotPsd, "Q is not PSD");
  const Eigen::Index dim = n.dim();
  const ConcaveProblem prob = quadratic_problem(
      -a * Matrix::Identity(dim, dim), n, q, cfg.method);
  return newton_solve(prob, q * (1.0 / (2.0 * a)), cfg);
}

}  // namespace kleinman
