#include "kleinman/banach_geometry.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "kleinman/random.h"

namespace kleinman {

namespace {

constexpr int kAscentSteps = 200;
constexpr double kStallTol = 1e-12;
constexpr double kNormSlack = 1.02;

bool is_two(const Exponent& p) { return !p.is_infinite() && p.value() == 2.0; }

Vector unit_start(Eigen::Index n, const Exponent& p, std::mt19937_64& rng) {
  Vector x = random_gaussian(n, 1, rng);
  const double nx = lp_norm(x, p);
  if (nx == 0.0) {
    x.setZero();
    x(0) = 1.0;
    return x;
  }
  return x / nx;
}

void require_space(Eigen::Index rows, Eigen::Index cols,
                   const LpSpace& space) {
  if (rows != space.dim || cols != space.dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("operator is {}x{}, space has dimension {}", rows,
                            cols, space.dim));
  }
}

void require_restarts(int restarts) {
  if (restarts < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("restarts must be >= 1, got {}", restarts));
  }
}

}  // namespace

Exponent Exponent::finite(double p) {
  if (!(p >= 1.0) || std::isinf(p)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("exponent must satisfy 1 <= p < inf, got {}", p));
  }
  return Exponent(p, false);
}

Exponent Exponent::from_double(double p) {
  if (std::isinf(p) && p > 0) return infinity();
  return finite(p);
}

double Exponent::value() const {
  return infinite_ ? std::numeric_limits<double>::infinity() : p_;
}

Exponent Exponent::dual() const {
  if (infinite_) return finite(1.0);
  if (p_ == 1.0) return infinity();
  return finite(p_ / (p_ - 1.0));
}

double lp_norm(const Eigen::Ref<const Vector>& x, const Exponent& p) {
  if (x.size() == 0) return 0.0;
  if (p.is_infinite()) return x.cwiseAbs().maxCoeff();
  const double pv = p.value();
  if (pv == 1.0) return x.cwiseAbs().sum();
  if (pv == 2.0) return x.norm();
  // Scale by the max entry so that |x_i|^p cannot overflow or underflow.
  const double scale = x.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return scale * std::pow((x.cwiseAbs() / scale).array().pow(pv).sum(),
                          1.0 / pv);
}

double lp_norm(const Eigen::Ref<const Vector>& x, double p) {
  return lp_norm(x, Exponent::from_double(p));
}

Vector duality_direction(const Eigen::Ref<const Vector>& v,
                         const Exponent& p) {
  const Eigen::Index n = v.size();
  Vector x = Vector::Zero(n);
  const double vmax = n > 0 ? v.cwiseAbs().maxCoeff() : 0.0;
  if (vmax == 0.0) {
    if (n > 0) x(0) = 1.0;
    return x;
  }
  if (p.is_infinite()) {
    for (Eigen::Index i = 0; i < n; ++i) x(i) = v(i) >= 0.0 ? 1.0 : -1.0;
    return x;
  }
  if (p.value() == 1.0) {
    Eigen::Index j = 0;
    v.cwiseAbs().maxCoeff(&j);
    x(j) = v(j) > 0.0 ? 1.0 : -1.0;
    return x;
  }
  // Equality case of Hoelder: x_i ~ sign(v_i) |v_i|^(q - 1).
  const double qm1 = 1.0 / (p.value() - 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = std::abs(v(i)) / vmax;
    x(i) = std::copysign(std::pow(a, qm1), v(i));
  }
  return x / lp_norm(x, p);
}

NormEstimate induced_norm(const Eigen::Ref<const Matrix>& p,
                          const LpSpace& space, std::uint64_t seed,
                          int restarts) {
  require_space(p.rows(), p.cols(), space);
  require_restarts(restarts);
  require_finite(p, "P");
  const Eigen::Index n = space.dim;
  const Exponent q = space.q();
  NormEstimate best;
  best.restarts = restarts;
  best.best_witness = Vector::Zero(n);
  if (n == 0) return best;
  best.best_witness(0) = 1.0;
  best.best_witness /= lp_norm(best.best_witness, space.p);

  if (is_two(space.p)) {
    Eigen::JacobiSVD<Matrix> svd(p, Eigen::ComputeFullV);
    best.best_witness = svd.matrixV().col(0);
    best.lower_bound = (p * best.best_witness).norm();
    return best;
  }

  auto objective = [&](const Vector& x) { return lp_norm(p * x, q); };
  best.lower_bound = objective(best.best_witness);
  for (int r = 0; r < restarts; ++r) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(r));
    Vector x = unit_start(n, space.p, rng);
    double value = objective(x);
    for (int step = 0; step < kAscentSteps; ++step) {
      // max <P x, y> over ||y||_p = 1 attains ||P x||_q, then maximize the
      // same pairing over x.
      const Vector y = duality_direction(p * x, space.p);
      const Vector x_next = duality_direction(p.transpose() * y, space.p);
      const double next = objective(x_next);
      const bool stalled = next - value <= kStallTol * std::max(1.0, value);
      if (next >= value) {
        x = x_next;
        value = next;
      }
      if (stalled) break;
    }
    if (value > best.lower_bound) {
      best.lower_bound = value;
      best.best_witness = x;
    }
  }
  return best;
}

NormEstimate quadratic_sup(const SymOperator& p, const LpSpace& space,
                           std::uint64_t seed, int restarts) {
  require_space(p.dim(), p.dim(), space);
  require_restarts(restarts);
  const Eigen::Index n = space.dim;
  const Matrix& pm = p.matrix();
  NormEstimate best;
  best.restarts = restarts;
  best.best_witness = Vector::Zero(n);
  if (n == 0) return best;
  best.best_witness(0) = 1.0;
  best.best_witness /= lp_norm(best.best_witness, space.p);

  auto objective = [&](const Vector& x) { return std::abs(x.dot(pm * x)); };

  if (is_two(space.p)) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(pm);
    if (es.info() != Eigen::Success) {
      throw Error(ErrorCode::kEigensolverFailure,
                  "symmetric eigensolver did not converge");
    }
    const Eigen::Index last = n - 1;
    const bool top = std::abs(es.eigenvalues()(last)) >=
                     std::abs(es.eigenvalues()(0));
    best.best_witness = es.eigenvectors().col(top ? last : 0);
    best.lower_bound = objective(best.best_witness);
    return best;
  }

  best.lower_bound = objective(best.best_witness);
  for (int r = 0; r < restarts; ++r) {
    // Ascend x^T (s P) x separately for s = +1 and s = -1.
    for (const double sign : {1.0, -1.0}) {
      std::mt19937_64 rng(seed + static_cast<std::uint64_t>(r));
      Vector x = unit_start(n, space.p, rng);
      double value = objective(x);
      for (int step = 0; step < kAscentSteps; ++step) {
        const Vector x_next = duality_direction(sign * (pm * x), space.p);
        const double next = objective(x_next);
        const bool stalled = next - value <= kStallTol * std::max(1.0, value);
        if (next >= value) {
          x = x_next;
          value = next;
        }
        if (stalled) break;
      }
      if (value > best.lower_bound) {
        best.lower_bound = value;
        best.best_witness = x;
      }
    }
  }
  return best;
}

LsIiReport check_ls_ii(const SymOperator& p, const LpSpace& space,
                       int samples, std::uint64_t seed,
                       const ConeTolerances& tol) {
  require_space(p.dim(), p.dim(), space);
  if (samples < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("samples must be >= 1, got {}", samples));
  }
  if (!is_psd(p, tol)) {
    throw Error(ErrorCode::kNotPsd, "check_ls_ii requires a PSD operator");
  }
  LsIiReport report;
  report.samples = samples;
  report.norm_used =
      is_two(space.p)
          ? spectral_norm(p.matrix())
          : kNormSlack * induced_norm(p.matrix(), space, seed).lower_bound;
  report.tolerance = 1e-10 * (1.0 + std::pow(report.norm_used, 3));
  report.max_violation = -std::numeric_limits<double>::infinity();

  const Exponent q = space.q();
  std::mt19937_64 rng(seed);
  for (int s = 0; s < samples; ++s) {
    const Vector x = unit_start(space.dim, space.p, rng);
    const Vector px = p.matrix() * x;
    const double lhs = std::pow(lp_norm(px, q), 2);
    const double rhs = report.norm_used * x.dot(px);
    report.max_violation = std::max(report.max_violation, lhs - rhs);
  }
  return report;
}

}  // namespace kleinman
