#pragma once

#include <Eigen/Dense>

#include "kleinman/error.h"

namespace kleinman {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Tolerances that turn the exact PSD cone into a numerical one. Both are
/// relative and must lie in (0, 1).
struct ConeTolerances {
  double psd_tol = 1e-8;
  double sym_tol = 1e-10;

  void validate() const;
};

/// Throws kNonFinite if any entry of `m` is NaN or infinite.
void require_finite(const Eigen::Ref<const Matrix>& m, std::string_view what);

/// Throws kDimensionMismatch unless `m` is rows x cols.
void require_shape(const Eigen::Ref<const Matrix>& m, Eigen::Index rows,
                   Eigen::Index cols, std::string_view what);

/// A real symmetric n x n matrix, the finite-dimensional stand-in for a
/// symmetric operator X -> X*. The stored matrix is exactly symmetric.
class SymOperator {
 public:
  SymOperator() = default;

  /// Symmetrizes (M + M^T)/2 after checking that M is square, finite, and
  /// symmetric to within tol.sym_tol * max(1, ||M||_F).
  explicit SymOperator(const Eigen::Ref<const Matrix>& m,
                       const ConeTolerances& tol = {});

  static SymOperator zero(Eigen::Index n);
  static SymOperator identity(Eigen::Index n);
  /// Symmetrizes unconditionally; for values that are symmetric by
  /// construction (e.g. C^T C) where the check would only cost time.
  static SymOperator symmetrized(const Eigen::Ref<const Matrix>& m);

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  SymOperator operator+(const SymOperator& other) const;
  SymOperator operator-(const SymOperator& other) const;
  SymOperator operator*(double s) const;

 private:
  Matrix m_;
};

/// Largest |M_ij - M_ji| relative to max(1, ||M||_F).
double relative_asymmetry(const Eigen::Ref<const Matrix>& m);

/// <Px, y> = y^T P x.
double pairing(const SymOperator& p, const Eigen::Ref<const Vector>& x,
               const Eigen::Ref<const Vector>& y);

/// Smallest eigenvalue from a symmetric eigensolver.
double lambda_min(const SymOperator& p);

/// lambda_min(P) >= -psd_tol * max(1, ||P||_2).
bool is_psd(const SymOperator& p, const ConeTolerances& tol = {});

enum class ConeOrder { kEqual, kLessEq, kGreaterEq, kIncomparable };

std::string_view to_string(ConeOrder order);

/// Loewner-order comparison of P against R.
ConeOrder cone_compare(const SymOperator& p, const SymOperator& r,
                       const ConeTolerances& tol = {});

struct OpNorms {
  double frobenius = 0.0;
  double spectral = 0.0;
};

OpNorms op_norms(const Eigen::Ref<const Matrix>& m);

double spectral_norm(const Eigen::Ref<const Matrix>& m);

}  // namespace kleinman
