#pragma once

#include <cstdint>

#include "kleinman/operator_core.h"

namespace kleinman {

/// Exponent p in [1, infinity]. Infinity is a distinct state rather than a
/// large double so that |x_i|^p never overflows.
class Exponent {
 public:
  /// Throws kInvalidArgument unless 1 <= p < infinity.
  static Exponent finite(double p);
  static Exponent infinity() { return Exponent(0.0, true); }
  /// Accepts +infinity as well as finite p >= 1.
  static Exponent from_double(double p);

  bool is_infinite() const { return infinite_; }
  /// +infinity for the infinite exponent.
  double value() const;
  /// q with 1/p + 1/q = 1.
  Exponent dual() const;

 private:
  Exponent(double p, bool infinite) : p_(p), infinite_(infinite) {}
  double p_;
  bool infinite_;
};

/// R^n with the p-norm; its dual is R^n with the q-norm.
struct LpSpace {
  Eigen::Index dim = 0;
  Exponent p = Exponent::finite(2.0);

  Exponent q() const { return p.dual(); }
};

double lp_norm(const Eigen::Ref<const Vector>& x, const Exponent& p);
/// Throws kInvalidArgument for p < 1 or NaN; p = +infinity gives max |x_i|.
double lp_norm(const Eigen::Ref<const Vector>& x, double p);

/// Unit vector x (||x||_p = 1) maximizing <v, x>. Returns a unit coordinate
/// vector when v = 0.
Vector duality_direction(const Eigen::Ref<const Vector>& v, const Exponent& p);

/// A lower bound achieved by a witness: the objective evaluated at
/// best_witness equals lower_bound.
struct NormEstimate {
  double lower_bound = 0.0;
  Vector best_witness;
  int restarts = 0;
};

inline constexpr int kDefaultRestarts = 64;

/// sup_{||x||_p = 1} ||P x||_q. Exact (SVD) for p = 2; otherwise multi-start
/// alternating duality-map ascent, deterministic given seed.
NormEstimate induced_norm(const Eigen::Ref<const Matrix>& p,
                          const LpSpace& space, std::uint64_t seed = 0,
                          int restarts = kDefaultRestarts);

/// sup_{||x||_p = 1} |x^T P x|. Exact (eigenvalues) for p = 2.
NormEstimate quadratic_sup(const SymOperator& p, const LpSpace& space,
                           std::uint64_t seed = 0,
                           int restarts = kDefaultRestarts);

struct LsIiReport {
  /// max over samples of ||P x||_q^2 - ||P|| x^T P x.
  double max_violation = 0.0;
  /// The ||P|| used: exact for p = 2, else the estimate inflated by 2%.
  double norm_used = 0.0;
  /// 1e-10 (1 + ||P||^3)
  double tolerance = 0.0;
  int samples = 0;
};

/// Samples random unit x and evaluates ||P x||_q^2 <= ||P|| <P x, x>.
/// Throws kNotPsd if P is not PSD.
LsIiReport check_ls_ii(const SymOperator& p, const LpSpace& space,
                       int samples, std::uint64_t seed,
                       const ConeTolerances& tol = {});

}  // namespace kleinman
