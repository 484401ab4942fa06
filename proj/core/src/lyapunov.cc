#include "kleinman/lyapunov.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "kleinman/random.h"
#include "kleinman/riccati.h"
#include "kleinman/semigroup.h"

namespace kleinman {

std::string_view to_string(LyapunovMethod method) {
  switch (method) {
    case LyapunovMethod::kSchur: return "schur";
    case LyapunovMethod::kKron: return "kron";
  }
  return "unknown";
}

namespace {

void require_square(const Eigen::Ref<const Matrix>& a) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("A must be square, got {}x{}", a.rows(), a.cols()));
  }
}

void check_eigenvalue_sums(const std::vector<std::complex<double>>& eig,
                           double norm_a) {
  double closest = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < eig.size(); ++i) {
    for (size_t j = i; j < eig.size(); ++j) {
      closest = std::min(closest, std::abs(eig[i] + eig[j]));
    }
  }
  if (!eig.empty() && !(closest > 1e-10 * norm_a)) {
    throw Error(ErrorCode::kSpectrumDegenerate,
                fmt::format("min |l_i + l_j| = {:.3e} <= 1e-10 * ||A||_2 "
                            "(||A||_2 = {:.3e})",
                            closest, norm_a));
  }
}

// Eigenvalues of the 1x1 / 2x2 diagonal blocks of a real Schur form.
std::vector<std::complex<double>> block_eigenvalues(
    const Matrix& t, const std::vector<Eigen::Index>& starts) {
  std::vector<std::complex<double>> out;
  for (size_t b = 0; b + 1 < starts.size(); ++b) {
    const Eigen::Index s = starts[b];
    if (starts[b + 1] - s == 1) {
      out.emplace_back(t(s, s), 0.0);
      continue;
    }
    const double a = t(s, s), bb = t(s, s + 1), c = t(s + 1, s),
                 d = t(s + 1, s + 1);
    const std::complex<double> half_tr = 0.5 * (a + d);
    const std::complex<double> disc =
        std::sqrt(std::complex<double>(0.25 * (a - d) * (a - d) + bb * c));
    out.push_back(half_tr + disc);
    out.push_back(half_tr - disc);
  }
  return out;
}

// Solves S1^T X + X S2 = R for tiny (<= 2x2) blocks.
Matrix solve_small_sylvester(const Eigen::Ref<const Matrix>& s1,
                             const Eigen::Ref<const Matrix>& s2,
                             const Eigen::Ref<const Matrix>& r) {
  const Eigen::Index p = s1.rows(), q = s2.rows();
  if (p == 1 && q == 1) {
    const double d = s1(0, 0) + s2(0, 0);
    if (d == 0.0) {
      throw Error(ErrorCode::kSpectrumDegenerate,
                  "singular 1x1 Lyapunov block");
    }
    return Matrix::Constant(1, 1, r(0, 0) / d);
  }
  // (I_q (x) S1^T + S2^T (x) I_p) vec(X) = vec(R)
  Matrix k = Matrix::Zero(p * q, p * q);
  for (Eigen::Index j = 0; j < q; ++j) {
    k.block(j * p, j * p, p, p) += s1.transpose();
    for (Eigen::Index l = 0; l < q; ++l) {
      k.block(j * p, l * p, p, p) +=
          s2(l, j) * Matrix::Identity(p, p);
    }
  }
  Eigen::FullPivLU<Matrix> lu(k);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::kSpectrumDegenerate,
                "singular 2x2 Lyapunov block");
  }
  const Vector x = lu.solve(Eigen::Map<const Vector>(r.eval().data(), p * q));
  return Eigen::Map<const Matrix>(x.data(), p, q);
}

}  // namespace

SchurLyapunovSolver::SchurLyapunovSolver(const Eigen::Ref<const Matrix>& a) {
  require_square(a);
  require_finite(a, "A");
  const Eigen::Index n = a.rows();
  if (n == 0) {
    block_start_ = {0};
    return;
  }
  Eigen::RealSchur<Matrix> schur(a);
  if (schur.info() != Eigen::Success) {
    throw Error(ErrorCode::kEigensolverFailure,
                "real Schur decomposition did not converge");
  }
  u_ = schur.matrixU();
  t_ = schur.matrixT();

  for (Eigen::Index i = 0; i < n;) {
    block_start_.push_back(i);
    i += (i + 1 < n && t_(i + 1, i) != 0.0) ? 2 : 1;
  }
  block_start_.push_back(n);
  eigenvalues_ = block_eigenvalues(t_, block_start_);
  check_eigenvalue_sums(eigenvalues_, spectral_norm(a));
}

Matrix SchurLyapunovSolver::solve(const Eigen::Ref<const Matrix>& rhs) const {
  const Eigen::Index n = t_.rows();
  require_shape(rhs, n, n, "right-hand side");
  if (n == 0) return Matrix(0, 0);

  // T^T Y + Y T = U^T R U, then X = U Y U^T.
  const Matrix c = u_.transpose() * rhs * u_;
  Matrix y = Matrix::Zero(n, n);
  const size_t blocks = block_start_.size() - 1;
  for (size_t bi = 0; bi < blocks; ++bi) {
    const Eigen::Index i0 = block_start_[bi];
    const Eigen::Index ni = block_start_[bi + 1] - i0;
    for (size_t bj = 0; bj < blocks; ++bj) {
      const Eigen::Index j0 = block_start_[bj];
      const Eigen::Index nj = block_start_[bj + 1] - j0;
      Matrix r = c.block(i0, j0, ni, nj);
      if (i0 > 0) {
        r.noalias() -= t_.block(0, i0, i0, ni).transpose() *
                       y.block(0, j0, i0, nj);
      }
      if (j0 > 0) {
        r.noalias() -= y.block(i0, 0, ni, j0) * t_.block(0, j0, j0, nj);
      }
      y.block(i0, j0, ni, nj) = solve_small_sylvester(
          t_.block(i0, i0, ni, ni), t_.block(j0, j0, nj, nj), r);
    }
  }
  return u_ * y * u_.transpose();
}

Vector LyapunovGeneratorMatrix::apply(const Eigen::Ref<const Matrix>& p) const {
  require_shape(p, n, n, "P");
  return g * Eigen::Map<const Vector>(p.eval().data(), n * n);
}

LyapunovGeneratorMatrix lyapunov_generator(const Eigen::Ref<const Matrix>& a) {
  require_square(a);
  require_finite(a, "A");
  const Eigen::Index n = a.rows();
  if (n > kKronMaxDim) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("dense Lyapunov generator limited to n <= {}, got "
                            "{}",
                            kKronMaxDim, n));
  }
  LyapunovGeneratorMatrix out;
  out.n = n;
  out.g = Matrix::Zero(n * n, n * n);
  // Block (j, l) of I (x) A^T is delta_jl A^T; of A^T (x) I it is A(l, j) I.
  for (Eigen::Index j = 0; j < n; ++j) {
    out.g.block(j * n, j * n, n, n) += a.transpose();
    for (Eigen::Index l = 0; l < n; ++l) {
      const double alj = a(l, j);
      if (alj == 0.0) continue;
      for (Eigen::Index i = 0; i < n; ++i) out.g(j * n + i, l * n + i) += alj;
    }
  }
  return out;
}

void require_lyapunov_solvable(const Eigen::Ref<const Matrix>& a) {
  require_square(a);
  require_finite(a, "A");
  if (a.size() == 0) return;
  Eigen::EigenSolver<Matrix> es(a, false);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::kEigensolverFailure,
                "nonsymmetric eigensolver did not converge");
  }
  std::vector<std::complex<double>> eig(es.eigenvalues().data(),
                                        es.eigenvalues().data() + a.rows());
  check_eigenvalue_sums(eig, spectral_norm(a));
}

double lyapunov_residual(const Eigen::Ref<const Matrix>& a,
                         const Eigen::Ref<const Matrix>& p,
                         const Eigen::Ref<const Matrix>& q) {
  return (a.transpose() * p + p * a + q).norm();
}

SymOperator solve_lyapunov(const Eigen::Ref<const Matrix>& a,
                           const SymOperator& q, LyapunovMethod method) {
  require_square(a);
  require_shape(q.matrix(), a.rows(), a.rows(), "Q");
  const Eigen::Index n = a.rows();

  Matrix p;
  if (method == LyapunovMethod::kSchur) {
    SchurLyapunovSolver solver(a);
    p = solver.solve(-q.matrix());
  } else {
    require_lyapunov_solvable(a);
    const LyapunovGeneratorMatrix gen = lyapunov_generator(a);
    Eigen::PartialPivLU<Matrix> lu(gen.g);
    const Matrix neg_q = -q.matrix();
    const Vector x = lu.solve(Eigen::Map<const Vector>(neg_q.data(), n * n));
    p = Eigen::Map<const Matrix>(x.data(), n, n);
  }
  require_finite(p, "Lyapunov solution");
  // Solutions are symmetric by construction; drift means a broken solve.
  const double asym = relative_asymmetry(p);
  if (asym > 1e-8) {
    throw Error(ErrorCode::kAsymmetric,
                fmt::format("Lyapunov solution asymmetry {:.3e} exceeds 1e-8",
                            asym));
  }
  SymOperator sol = SymOperator::symmetrized(p);

  const double residual = lyapunov_residual(a, sol.matrix(), q.matrix());
  const double bound =
      1e-10 * (1.0 + q.matrix().norm() + a.norm() * sol.matrix().norm());
  if (!(residual <= bound)) {
    throw Error(ErrorCode::kResidualTooLarge,
                fmt::format("Lyapunov residual {:.3e} exceeds {:.3e} ({})",
                            residual, bound, to_string(method)));
  }
  return sol;
}

WonhamReport wonham_equivalence(const Eigen::Ref<const Matrix>& a,
                                const Eigen::Ref<const Matrix>& c,
                                const ConeTolerances& tol, std::uint64_t seed,
                                int samples) {
  require_square(a);
  if (c.cols() != a.rows()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("C has {} columns, A is {}x{}", c.cols(), a.rows(),
                            a.cols()));
  }
  samples = std::max(samples, 20);
  const Eigen::Index n = a.rows();
  WonhamReport report;
  report.samples = samples;
  report.hypothesis_met = hautus_detectable(c, a);

  try {
    const SymOperator p =
        solve_lyapunov(a, SymOperator::symmetrized(c.transpose() * c));
    report.cond_i = is_psd(p, tol);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kSpectrumDegenerate &&
        e.code() != ErrorCode::kResidualTooLarge) {
      throw;
    }
    report.cond_i_decidable = false;
  }

  report.cond_ii = spectral_abscissa(a).is_stable;

  const LyapunovGeneratorMatrix gen = lyapunov_generator(a);
  Eigen::FullPivLU<Matrix> lu(gen.g);
  if (lu.isInvertible()) {
    std::mt19937_64 rng(seed);
    bool positive = true;
    for (int s = 0; s < samples && positive; ++s) {
      // Alternate full-rank and rank-one samples.
      const Matrix q = (s % 2 == 0) ? random_psd(n, n, rng).matrix()
                                    : random_psd(n, 1, rng).matrix();
      const Vector x = -lu.solve(Eigen::Map<const Vector>(q.data(), n * n));
      const Matrix img = Eigen::Map<const Matrix>(x.data(), n, n);
      positive = is_psd(SymOperator::symmetrized(img), tol);
    }
    report.cond_iii = positive;
  }

  const bool ii_iii = report.cond_ii == report.cond_iii;
  report.consistent =
      ii_iii && (!report.cond_i_decidable || report.cond_i == report.cond_ii);
  return report;
}

}  // namespace kleinman
