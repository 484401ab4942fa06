#include "schur.h"

#include <vector>

#include <fmt/format.h>
#include <lapacke.h>

namespace kleinman::detail {

OrderedSchur ordered_real_schur(
    const Eigen::Ref<const Matrix>& m,
    const std::function<bool(std::complex<double>)>& select) {
  const Eigen::Index n = m.rows();
  OrderedSchur out;
  if (n == 0) return out;

  Eigen::RealSchur<Matrix> schur(m);
  if (schur.info() != Eigen::Success) {
    throw Error(ErrorCode::kEigensolverFailure,
                "real Schur decomposition did not converge");
  }
  out.t = schur.matrixT();
  out.u = schur.matrixU();

  std::vector<lapack_logical> flags(static_cast<size_t>(n), 0);
  for (Eigen::Index i = 0; i < n;) {
    if (i + 1 < n && out.t(i + 1, i) != 0.0) {
      const double a = out.t(i, i), b = out.t(i, i + 1), c = out.t(i + 1, i),
                   d = out.t(i + 1, i + 1);
      const std::complex<double> lambda =
          0.5 * (a + d) +
          std::sqrt(std::complex<double>(0.25 * (a - d) * (a - d) + b * c));
      const lapack_logical pick = select(lambda) ? 1 : 0;
      flags[i] = flags[i + 1] = pick;
      i += 2;
    } else {
      flags[i] = select({out.t(i, i), 0.0}) ? 1 : 0;
      i += 1;
    }
  }

  // The workspace query in LAPACKE_dtrsen dereferences a null iwork for
  // job = 'N', so the _work variant is called with explicit buffers.
  std::vector<double> wr(n), wi(n), work(n);
  lapack_int iwork = 0;
  lapack_int selected = 0;
  double s = 0.0, sep = 0.0;
  const lapack_int info = LAPACKE_dtrsen_work(
      LAPACK_COL_MAJOR, 'N', 'V', flags.data(), static_cast<lapack_int>(n),
      out.t.data(), static_cast<lapack_int>(n), out.u.data(),
      static_cast<lapack_int>(n), wr.data(), wi.data(), &selected, &s, &sep,
      work.data(), static_cast<lapack_int>(n), &iwork, 1);
  if (info != 0) {
    throw Error(ErrorCode::kEigensolverFailure,
                fmt::format("Schur reordering failed (dtrsen info={})", info));
  }
  out.selected = selected;
  return out;
}

}  // namespace kleinman::detail
