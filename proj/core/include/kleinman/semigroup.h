#pragma once

#include <cstdint>
#include <limits>

#include "kleinman/operator_core.h"

namespace kleinman {

/// Generator A of the matrix semigroup T(t) = exp(tA).
class SemigroupGenerator {
 public:
  explicit SemigroupGenerator(const Eigen::Ref<const Matrix>& a);
  const Matrix& matrix() const { return a_; }
  Eigen::Index dim() const { return a_.rows(); }

 private:
  Matrix a_;
};

struct StabilityReport {
  double abscissa = 0.0;  ///< max Re(lambda), 1/time
  bool is_stable = false; ///< abscissa < -margin
  double margin = 0.0;
};

/// exp(tA) by scaling and squaring with a Pade approximant. t = 0 returns the
/// identity exactly. Throws kOverflow if the result is not finite.
Matrix expm(const Eigen::Ref<const Matrix>& a, double t);

/// Default stability margin 1e-9 * max(1, ||A||_2).
double default_stability_margin(const Eigen::Ref<const Matrix>& a);

StabilityReport spectral_abscissa(const Eigen::Ref<const Matrix>& a);
StabilityReport spectral_abscissa(const Eigen::Ref<const Matrix>& a,
                                  double margin);

/// T(t)^T P T(t), symmetrized.
SymOperator lyapunov_semigroup_apply(const Eigen::Ref<const Matrix>& a,
                                     const SymOperator& p, double t);

struct DatkoIntegral {
  double value = 0.0;
  /// Estimate of the integral beyond t_max from the spectral abscissa;
  /// +infinity when A is not stable.
  double tail_bound = std::numeric_limits<double>::infinity();
  double t_max = 0.0;
  double quad_step = 0.0;
};

/// Composite Simpson quadrature of int_0^t_max ||exp(tA) x||_2^2 dt. The step
/// is shrunk so that t_max is an even multiple of it.
DatkoIntegral datko_integral(const Eigen::Ref<const Matrix>& a,
                             const Eigen::Ref<const Vector>& x, double t_max,
                             double quad_step);

/// Horizon 50/|abscissa| (stable) or 50, step with ||A||_2 * h <= 0.1.
DatkoIntegral datko_integral(const Eigen::Ref<const Matrix>& a,
                             const Eigen::Ref<const Vector>& x);

enum class GrowthClass { kDecaying, kDivergent, kInconclusive };

/// Exponential-fit classification of log f(t) over the last third of
/// [0, t_max] for f(t) = ||M exp(tA) x||^2. Rates within +-1e-3 of zero are
/// inconclusive.
struct GrowthFit {
  GrowthClass cls = GrowthClass::kInconclusive;
  double rate = 0.0;
};

GrowthFit classify_growth(const Eigen::Ref<const Matrix>& observe,
                          const Eigen::Ref<const Matrix>& a,
                          const Eigen::Ref<const Vector>& x, double t_max);

struct DetectorSampleReport {
  int consistent = 0;
  int violating = 0;
  int inconclusive = 0;
};

/// Samples random x and checks the L2-detectability implication
///   int ||C T(t) x||^2 < inf  =>  int ||T(t) x||^2 < inf
/// on finite-horizon growth fits. A diagnostic, not a decision procedure.
DetectorSampleReport l2_detector_sample(const Eigen::Ref<const Matrix>& c,
                                        const Eigen::Ref<const Matrix>& a,
                                        int trials, std::uint64_t seed,
                                        double t_max);

}  // namespace kleinman
