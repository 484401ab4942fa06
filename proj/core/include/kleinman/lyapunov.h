#pragma once

#include <complex>
#include <cstdint>
#include <string_view>
#include <vector>

#include "kleinman/operator_core.h"

namespace kleinman {

enum class LyapunovMethod { kSchur, kKron };

std::string_view to_string(LyapunovMethod method);

/// Dense Kronecker size limit for the kKron method and the generator inverse.
inline constexpr Eigen::Index kKronMaxDim = 100;

/// Solves A^T X + X A = R for arbitrary (not necessarily symmetric) R by
/// Bartels-Stewart back-substitution on a cached real Schur form of A.
/// Construction refuses spectra with min |l_i + l_j| <= 1e-10 ||A||_2.
class SchurLyapunovSolver {
 public:
  explicit SchurLyapunovSolver(const Eigen::Ref<const Matrix>& a);

  Matrix solve(const Eigen::Ref<const Matrix>& rhs) const;

  const std::vector<std::complex<double>>& eigenvalues() const {
    return eigenvalues_;
  }

 private:
  Matrix u_;  // A = U T U^T
  Matrix t_;
  std::vector<Eigen::Index> block_start_;
  std::vector<std::complex<double>> eigenvalues_;
};

/// vec(A^T P + P A) = G vec(P) with column-major vec,
/// G = (I (x) A^T) + (A^T (x) I).
struct LyapunovGeneratorMatrix {
  Eigen::Index n = 0;
  Matrix g;

  Vector apply(const Eigen::Ref<const Matrix>& p) const;
};

LyapunovGeneratorMatrix lyapunov_generator(const Eigen::Ref<const Matrix>& a);

/// Throws kSpectrumDegenerate when l_i(A) + l_j(A) comes within
/// 1e-10 ||A||_2 of zero.
void require_lyapunov_solvable(const Eigen::Ref<const Matrix>& a);

/// ||A^T P + P A + Q||_F.
double lyapunov_residual(const Eigen::Ref<const Matrix>& a,
                         const Eigen::Ref<const Matrix>& p,
                         const Eigen::Ref<const Matrix>& q);

/// Solves A^T P + P A = -Q. Every returned P satisfies
/// ||A^T P + P A + Q||_F <= 1e-10 (1 + ||Q||_F + ||A||_F ||P||_F);
/// violations raise kResidualTooLarge.
SymOperator solve_lyapunov(const Eigen::Ref<const Matrix>& a,
                           const SymOperator& q,
                           LyapunovMethod method = LyapunovMethod::kSchur);

struct WonhamReport {
  bool hypothesis_met = false;  ///< (C, A) Hautus-detectable
  bool cond_i_decidable = true;
  bool cond_i = false;    ///< A^T P + P A = -C^T C has a PSD solution
  bool cond_ii = false;   ///< A exponentially stable
  bool cond_iii = false;  ///< generator invertible with -G^{-1} >= 0
  bool consistent = false;
  int samples = 0;
};

/// Three-way stability equivalence for the Lyapunov equation with Q = C^T C.
/// cond_iii is sampled on `samples` (>= 20) random PSD matrices.
WonhamReport wonham_equivalence(const Eigen::Ref<const Matrix>& a,
                                const Eigen::Ref<const Matrix>& c,
                                const ConeTolerances& tol = {},
                                std::uint64_t seed = 0, int samples = 24);

}  // namespace kleinman
