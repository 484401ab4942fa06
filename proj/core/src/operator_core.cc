#include "kleinman/operator_core.h"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

namespace kleinman {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kAsymmetric: return "Asymmetric";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kMissingField: return "MissingField";
    case ErrorCode::kNotPsd: return "NotPsd";
    case ErrorCode::kNonPositiveA: return "NonPositiveA";
    case ErrorCode::kEigensolverFailure: return "EigensolverFailure";
    case ErrorCode::kSpectrumDegenerate: return "SpectrumDegenerate";
    case ErrorCode::kOverflow: return "Overflow";
    case ErrorCode::kResidualTooLarge: return "ResidualTooLarge";
    case ErrorCode::kNotStabilizable: return "NotStabilizable";
    case ErrorCode::kNotDetectable: return "NotDetectable";
    case ErrorCode::kStabilizationFailed: return "StabilizationFailed";
    case ErrorCode::kInitialGuessNotStabilizing:
      return "InitialGuessNotStabilizing";
    case ErrorCode::kIterateNotStabilizing: return "IterateNotStabilizing";
    case ErrorCode::kMonotonicityViolated: return "MonotonicityViolated";
    case ErrorCode::kMaxIterExceeded: return "MaxIterExceeded";
    case ErrorCode::kOracleSingular: return "OracleSingular";
    case ErrorCode::kRangeConditionFailed: return "RangeConditionFailed";
    case ErrorCode::kLinearizationUnstable: return "LinearizationUnstable";
    case ErrorCode::kConeViolation: return "ConeViolation";
  }
  return "Unknown";
}

bool is_input_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kNonFinite:
    case ErrorCode::kAsymmetric:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kParseError:
    case ErrorCode::kMissingField:
    case ErrorCode::kNotPsd:
    case ErrorCode::kNonPositiveA:
      return true;
    default:
      return false;
  }
}

void ConeTolerances::validate() const {
  auto in_range = [](double v) { return v > 0.0 && v < 1.0; };
  if (!in_range(psd_tol) || !in_range(sym_tol)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("cone tolerances must lie in (0,1), got psd_tol={} "
                            "sym_tol={}",
                            psd_tol, sym_tol));
  }
}

void require_finite(const Eigen::Ref<const Matrix>& m, std::string_view what) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::kNonFinite,
                fmt::format("{} has non-finite entries", what));
  }
}

void require_shape(const Eigen::Ref<const Matrix>& m, Eigen::Index rows,
                   Eigen::Index cols, std::string_view what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("{} is {}x{}, expected {}x{}", what, m.rows(),
                            m.cols(), rows, cols));
  }
}

double relative_asymmetry(const Eigen::Ref<const Matrix>& m) {
  if (m.size() == 0) return 0.0;
  const double scale = std::max(1.0, m.norm());
  return (m - m.transpose()).cwiseAbs().maxCoeff() / scale;
}

SymOperator::SymOperator(const Eigen::Ref<const Matrix>& m,
                         const ConeTolerances& tol) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("symmetric operator must be square, got {}x{}",
                            m.rows(), m.cols()));
  }
  require_finite(m, "symmetric operator");
  const double asym = relative_asymmetry(m);
  if (asym > tol.sym_tol) {
    throw Error(ErrorCode::kAsymmetric,
                fmt::format("relative asymmetry {:.3e} exceeds {:.3e}", asym,
                            tol.sym_tol));
  }
  m_ = 0.5 * (m + m.transpose());
}

SymOperator SymOperator::zero(Eigen::Index n) {
  return symmetrized(Matrix::Zero(n, n));
}

SymOperator SymOperator::identity(Eigen::Index n) {
  return symmetrized(Matrix::Identity(n, n));
}

SymOperator SymOperator::symmetrized(const Eigen::Ref<const Matrix>& m) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("symmetric operator must be square, got {}x{}",
                            m.rows(), m.cols()));
  }
  require_finite(m, "symmetric operator");
  SymOperator out;
  out.m_ = 0.5 * (m + m.transpose());
  return out;
}

SymOperator SymOperator::operator+(const SymOperator& other) const {
  require_shape(other.m_, dim(), dim(), "operand");
  return symmetrized(m_ + other.m_);
}

SymOperator SymOperator::operator-(const SymOperator& other) const {
  require_shape(other.m_, dim(), dim(), "operand");
  return symmetrized(m_ - other.m_);
}

SymOperator SymOperator::operator*(double s) const {
  return symmetrized(s * m_);
}

double pairing(const SymOperator& p, const Eigen::Ref<const Vector>& x,
               const Eigen::Ref<const Vector>& y) {
  if (x.size() != p.dim() || y.size() != p.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("pairing of {}x{} operator with vectors of length "
                            "{} and {}",
                            p.dim(), p.dim(), x.size(), y.size()));
  }
  return y.dot(p.matrix() * x);
}

namespace {

Vector symmetric_eigenvalues(const Matrix& m) {
  if (m.size() == 0) return Vector();
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::kEigensolverFailure,
                "symmetric eigensolver did not converge");
  }
  return es.eigenvalues();
}

}  // namespace

double lambda_min(const SymOperator& p) {
  const Vector ev = symmetric_eigenvalues(p.matrix());
  return ev.size() == 0 ? 0.0 : ev(0);
}

bool is_psd(const SymOperator& p, const ConeTolerances& tol) {
  const Vector ev = symmetric_eigenvalues(p.matrix());
  if (ev.size() == 0) return true;
  // Ascending order: the spectral norm is the larger of |first|, |last|.
  const double norm2 = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  return ev(0) >= -tol.psd_tol * std::max(1.0, norm2);
}

std::string_view to_string(ConeOrder order) {
  switch (order) {
    case ConeOrder::kEqual: return "Equal";
    case ConeOrder::kLessEq: return "LessEq";
    case ConeOrder::kGreaterEq: return "GreaterEq";
    case ConeOrder::kIncomparable: return "Incomparable";
  }
  return "Unknown";
}

ConeOrder cone_compare(const SymOperator& p, const SymOperator& r,
                       const ConeTolerances& tol) {
  if (p.dim() != r.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("cannot compare {}x{} with {}x{}", p.dim(),
                            p.dim(), r.dim(), r.dim()));
  }
  const bool le = is_psd(r - p, tol);
  const bool ge = is_psd(p - r, tol);
  if (le && ge) return ConeOrder::kEqual;
  if (le) return ConeOrder::kLessEq;
  if (ge) return ConeOrder::kGreaterEq;
  return ConeOrder::kIncomparable;
}

double spectral_norm(const Eigen::Ref<const Matrix>& m) {
  require_finite(m, "matrix");
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

OpNorms op_norms(const Eigen::Ref<const Matrix>& m) {
  return {m.norm(), spectral_norm(m)};
}

}  // namespace kleinman
