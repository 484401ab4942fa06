#include "kleinman/semigroup.h"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>
#include <unsupported/Eigen/MatrixFunctions>

namespace kleinman {

namespace {

void require_square(const Eigen::Ref<const Matrix>& a, std::string_view what) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("{} must be square, got {}x{}", what, a.rows(),
                            a.cols()));
  }
}

constexpr double kGrowthDeadband = 1e-3;

}  // namespace

SemigroupGenerator::SemigroupGenerator(const Eigen::Ref<const Matrix>& a)
    : a_(a) {
  require_square(a, "generator");
  require_finite(a, "generator");
}

Matrix expm(const Eigen::Ref<const Matrix>& a, double t) {
  require_square(a, "A");
  require_finite(a, "A");
  if (!std::isfinite(t)) {
    throw Error(ErrorCode::kInvalidArgument, "expm time must be finite");
  }
  const Eigen::Index n = a.rows();
  if (t == 0.0) return Matrix::Identity(n, n);
  const Matrix scaled = t * a;
  if (!scaled.allFinite()) {
    throw Error(ErrorCode::kOverflow,
                fmt::format("t*A overflows at t={}", t));
  }
  Matrix e = scaled.exp();
  if (!e.allFinite()) {
    throw Error(ErrorCode::kOverflow,
                fmt::format("exp(tA) overflows at t={} (t*||A||_F={:.3e})", t,
                            scaled.norm()));
  }
  return e;
}

double default_stability_margin(const Eigen::Ref<const Matrix>& a) {
  return 1e-9 * std::max(1.0, spectral_norm(a));
}

StabilityReport spectral_abscissa(const Eigen::Ref<const Matrix>& a) {
  return spectral_abscissa(a, default_stability_margin(a));
}

StabilityReport spectral_abscissa(const Eigen::Ref<const Matrix>& a,
                                  double margin) {
  require_square(a, "A");
  require_finite(a, "A");
  StabilityReport report;
  report.margin = margin;
  if (a.size() == 0) {
    report.abscissa = -std::numeric_limits<double>::infinity();
    report.is_stable = true;
    return report;
  }
  Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::kEigensolverFailure,
                "nonsymmetric eigensolver did not converge");
  }
  report.abscissa = es.eigenvalues().real().maxCoeff();
  report.is_stable = report.abscissa < -margin;
  return report;
}

SymOperator lyapunov_semigroup_apply(const Eigen::Ref<const Matrix>& a,
                                     const SymOperator& p, double t) {
  require_shape(a, p.dim(), p.dim(), "A");
  if (t < 0.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "Lyapunov semigroup is only defined for t >= 0");
  }
  if (t == 0.0) return p;
  const Matrix e = expm(a, t);
  return SymOperator::symmetrized(e.transpose() * p.matrix() * e);
}

DatkoIntegral datko_integral(const Eigen::Ref<const Matrix>& a,
                             const Eigen::Ref<const Vector>& x, double t_max,
                             double quad_step) {
  require_square(a, "A");
  if (x.size() != a.rows()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "initial vector length does not match A");
  }
  if (!(t_max > 0.0) || !(quad_step > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "Datko integral needs t_max > 0 and quad_step > 0");
  }
  long intervals = static_cast<long>(std::ceil(t_max / quad_step));
  if (intervals % 2 != 0) ++intervals;
  const double h = t_max / static_cast<double>(intervals);
  const Matrix step = expm(a, h);

  DatkoIntegral out;
  out.t_max = t_max;
  out.quad_step = h;

  Vector z = x;
  double sum = z.squaredNorm();
  for (long k = 1; k <= intervals; ++k) {
    z = step * z;
    const double f = z.squaredNorm();
    if (!std::isfinite(f)) {
      out.value = std::numeric_limits<double>::infinity();
      return out;
    }
    sum += (k == intervals) ? f : (k % 2 == 1 ? 4.0 * f : 2.0 * f);
  }
  out.value = sum * h / 3.0;

  const StabilityReport stab = spectral_abscissa(a);
  if (stab.is_stable) {
    // ||T(t)y||^2 ~ ||y||^2 exp(2 alpha t) past the horizon.
    out.tail_bound = z.squaredNorm() / (2.0 * std::abs(stab.abscissa));
  }
  return out;
}

DatkoIntegral datko_integral(const Eigen::Ref<const Matrix>& a,
                             const Eigen::Ref<const Vector>& x) {
  const StabilityReport stab = spectral_abscissa(a);
  const double t_max = stab.is_stable ? 50.0 / std::abs(stab.abscissa) : 50.0;
  const double norm_a = spectral_norm(a);
  const double h = norm_a > 0.0 ? 0.1 / norm_a : t_max / 1000.0;
  return datko_integral(a, x, t_max, std::min(h, t_max / 2.0));
}

GrowthFit classify_growth(const Eigen::Ref<const Matrix>& observe,
                          const Eigen::Ref<const Matrix>& a,
                          const Eigen::Ref<const Vector>& x, double t_max) {
  require_square(a, "A");
  if (observe.cols() != a.rows() || x.size() != a.rows()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "observation/initial vector does not match A");
  }
  constexpr int kSamples = 3000;
  const double h = t_max / kSamples;
  const Matrix step = expm(a, h);

  // Track exp(tA)x as exp(log_scale) * u with ||u|| = 1 to survive growth.
  Vector u = x;
  double log_scale = 0.0;
  const double x_norm = u.norm();
  if (x_norm == 0.0) return {GrowthClass::kDecaying, -kGrowthDeadband};
  u /= x_norm;
  log_scale = std::log(x_norm);

  const int first = 2 * kSamples / 3;
  double st = 0, sy = 0, stt = 0, sty = 0;
  int count = 0;
  for (int k = 1; k <= kSamples; ++k) {
    u = step * u;
    const double nu = u.norm();
    if (nu == 0.0) return {GrowthClass::kDecaying, -kGrowthDeadband};
    u /= nu;
    log_scale += std::log(nu);
    if (k < first) continue;
    const double obs = (observe * u).squaredNorm();
    if (obs == 0.0) return {GrowthClass::kDecaying, -kGrowthDeadband};
    const double t = k * h;
    const double y = std::log(obs) + 2.0 * log_scale;
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    ++count;
  }
  const double denom = count * stt - st * st;
  const double rate = (count * sty - st * sy) / denom;
  GrowthFit fit;
  fit.rate = rate;
  if (rate < -kGrowthDeadband) {
    fit.cls = GrowthClass::kDecaying;
  } else if (rate > kGrowthDeadband) {
    fit.cls = GrowthClass::kDivergent;
  } else {
    fit.cls = GrowthClass::kInconclusive;
  }
  return fit;
}

DetectorSampleReport l2_detector_sample(const Eigen::Ref<const Matrix>& c,
                                        const Eigen::Ref<const Matrix>& a,
                                        int trials, std::uint64_t seed,
                                        double t_max) {
  require_square(a, "A");
  if (c.cols() != a.rows()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("C has {} columns, A is {}x{}", c.cols(), a.rows(),
                            a.cols()));
  }
  const Eigen::Index n = a.rows();
  const Matrix identity = Matrix::Identity(n, n);
  DetectorSampleReport report;
  for (int trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(trial));
    std::normal_distribution<double> normal;
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = normal(rng);

    const GrowthClass observed = classify_growth(c, a, x, t_max).cls;
    if (observed == GrowthClass::kDivergent) {
      ++report.consistent;  // premise false, implication holds
      continue;
    }
    const GrowthClass state = classify_growth(identity, a, x, t_max).cls;
    if (state == GrowthClass::kDecaying) {
      ++report.consistent;
    } else if (observed == GrowthClass::kDecaying &&
               state == GrowthClass::kDivergent) {
      ++report.violating;
    } else {
      ++report.inconclusive;
    }
  }
  return report;
}

}  // namespace kleinman
