#pragma once

#include <complex>
#include <functional>

#include "kleinman/operator_core.h"

namespace kleinman::detail {

struct OrderedSchur {
  Matrix u;  ///< orthogonal, M = U T U^T
  Matrix t;  ///< quasi-upper-triangular
  Eigen::Index selected = 0;  ///< leading block holds the selected eigenvalues
};

/// Real Schur form of m reordered so that eigenvalues for which `select`
/// returns true occupy the leading diagonal block. Complex-conjugate pairs
/// are selected together (decided by the member with positive imaginary
/// part).
OrderedSchur ordered_real_schur(
    const Eigen::Ref<const Matrix>& m,
    const std::function<bool(std::complex<double>)>& select);

}  // namespace kleinman::detail
