#include "kleinman/banach_geometry.h"

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "kleinman/random.h"
#include "test_util.h"

namespace kleinman {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

LpSpace space(Eigen::Index n, double p) {
  return LpSpace{n, Exponent::from_double(p)};
}

TEST(ExponentTest, DualPairs) {
  EXPECT_TRUE(Exponent::finite(1.0).dual().is_infinite());
  EXPECT_EQ(Exponent::infinity().dual().value(), 1.0);
  EXPECT_DOUBLE_EQ(Exponent::finite(2.0).dual().value(), 2.0);
  EXPECT_DOUBLE_EQ(Exponent::finite(3.0).dual().value(), 1.5);
  EXPECT_THROW(Exponent::finite(0.5), Error);
  EXPECT_THROW(Exponent::finite(kInf), Error);
  EXPECT_TRUE(Exponent::from_double(kInf).is_infinite());
}

TEST(LpNormTest, Examples) {
  EXPECT_DOUBLE_EQ(lp_norm(vec2(3, 4), 2.0), 5.0);
  EXPECT_DOUBLE_EQ(lp_norm(vec2(1, 1), 1.0), 2.0);
  EXPECT_DOUBLE_EQ(lp_norm(vec2(1, -2), kInf), 2.0);
  EXPECT_THROW(lp_norm(vec2(1, 1), 0.5), Error);
  EXPECT_THROW(lp_norm(vec2(1, 1), std::nan("")), Error);
}

TEST(LpNormTest, NoOverflowForHugeEntries) {
  EXPECT_DOUBLE_EQ(lp_norm(vec2(1e200, 0), 3.0), 1e200);
}

TEST(LpNormTest, TriangleInequalityAndHomogeneity) {
  std::mt19937_64 rng(4);
  for (double p : {1.0, 1.5, 2.0, 3.0, kInf}) {
    for (int trial = 0; trial < 200; ++trial) {
      const Vector x = random_gaussian(7, 1, rng);
      const Vector y = random_gaussian(7, 1, rng);
      EXPECT_LE(lp_norm(x + y, p),
                (lp_norm(x, p) + lp_norm(y, p)) * (1 + 1e-14));
      EXPECT_NEAR(lp_norm(-2.5 * x, p), 2.5 * lp_norm(x, p),
                  1e-13 * lp_norm(x, p));
    }
  }
}

TEST(DualityDirectionTest, UnitNormAndAttainsDualNorm) {
  std::mt19937_64 rng(5);
  for (double p : {1.0, 1.5, 2.0, 3.0, kInf}) {
    const Exponent e = Exponent::from_double(p);
    for (int trial = 0; trial < 50; ++trial) {
      const Vector v = random_gaussian(6, 1, rng);
      const Vector x = duality_direction(v, e);
      EXPECT_NEAR(lp_norm(x, e), 1.0, 1e-12);
      EXPECT_NEAR(v.dot(x), lp_norm(v, e.dual()), 1e-10 * lp_norm(v, 2.0));
    }
  }
}

TEST(InducedNormTest, Examples) {
  EXPECT_NEAR(induced_norm(Matrix::Identity(2, 2), space(2, 2)).lower_bound,
              1.0, 1e-14);
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 2, 1;
  EXPECT_NEAR(induced_norm(d, space(2, 2)).lower_bound, 2.0, 1e-14);

  const Matrix ones = Matrix::Ones(2, 2);
  const double grid = test::grid_sup_2d(
      1.0, [&](const Vector& x) { return (ones * x).cwiseAbs().maxCoeff(); });
  const NormEstimate est = induced_norm(ones, space(2, 1.0));
  EXPECT_NEAR(est.lower_bound, 1.0, 1e-12);
  EXPECT_NEAR(est.lower_bound, grid, 1e-4);
}

TEST(InducedNormTest, ZeroOperator) {
  const NormEstimate est = induced_norm(Matrix::Zero(3, 3), space(3, 1.5));
  EXPECT_EQ(est.lower_bound, 0.0);
  EXPECT_NEAR(lp_norm(est.best_witness, 1.5), 1.0, 1e-12);
}

TEST(InducedNormTest, WitnessAchievesBound) {
  std::mt19937_64 rng(6);
  for (double p : {1.0, 1.5, 3.0, kInf}) {
    const LpSpace s = space(5, p);
    const Matrix m = random_gaussian(5, 5, rng);
    const NormEstimate est = induced_norm(m, s, 11);
    EXPECT_NEAR(lp_norm(est.best_witness, s.p), 1.0, 1e-10);
    EXPECT_NEAR(lp_norm(m * est.best_witness, s.q()), est.lower_bound,
                1e-10 * est.lower_bound);
    EXPECT_EQ(est.restarts, kDefaultRestarts);
  }
}

TEST(InducedNormTest, DeterministicGivenSeed) {
  std::mt19937_64 rng(7);
  const Matrix m = random_gaussian(4, 4, rng);
  EXPECT_EQ(induced_norm(m, space(4, 3.0), 9).lower_bound,
            induced_norm(m, space(4, 3.0), 9).lower_bound);
}

TEST(InducedNormTest, MatchesGridSearchInTwoDimensions) {
  std::mt19937_64 rng(8);
  for (double p : {1.5, 3.0, kInf}) {
    const double q = p == kInf ? 1.0 : p / (p - 1.0);
    const Matrix m = random_gaussian(2, 2, rng);
    const double grid = test::grid_sup_2d(
        p, [&](const Vector& x) { return test::pnorm(m * x, q); });
    const double est = induced_norm(m, space(2, p)).lower_bound;
    EXPECT_LE(est, grid * (1 + 1e-9) + 1e-12);
    EXPECT_NEAR(est, grid, 1e-3 * grid) << "p = " << p;
  }
}

TEST(QuadraticSupTest, Examples) {
  EXPECT_NEAR(
      quadratic_sup(SymOperator::identity(2), space(2, 2)).lower_bound, 1.0,
      1e-14);
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 1, -3;
  EXPECT_NEAR(quadratic_sup(SymOperator(d), space(2, 2)).lower_bound, 3.0,
              1e-14);
  EXPECT_EQ(quadratic_sup(SymOperator::zero(2), space(2, 3.0)).lower_bound,
            0.0);
}

TEST(QuadraticSupTest, NeverExceedsInducedNorm) {
  std::mt19937_64 rng(9);
  for (double p : {1.0, 1.5, 2.0, 3.0, kInf}) {
    for (int trial = 0; trial < 10; ++trial) {
      const SymOperator s = random_symmetric(4, rng);
      const double quad = quadratic_sup(s, space(4, p), trial).lower_bound;
      const double norm = induced_norm(s.matrix(), space(4, p), trial).lower_bound;
      EXPECT_LE(quad, norm * 1.02 + 1e-12);
    }
  }
}

TEST(QuadraticSupTest, ExactAtPEqualsTwo) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const SymOperator s = random_symmetric(6, rng);
    const double quad = quadratic_sup(s, space(6, 2)).lower_bound;
    Eigen::JacobiSVD<Matrix> svd(s.matrix());
    EXPECT_NEAR(quad, svd.singularValues()(0), 1e-10);
    EXPECT_NEAR(induced_norm(s.matrix(), space(6, 2)).lower_bound,
                svd.singularValues()(0), 1e-10);
  }
}

TEST(QuadraticSupTest, AgreesWithNormForPsdOperators) {
  std::mt19937_64 rng(11);
  for (double p : {1.5, 3.0, kInf}) {
    for (int trial = 0; trial < 10; ++trial) {
      const SymOperator s = random_psd(5, 5, rng);
      const double quad = quadratic_sup(s, space(5, p), trial).lower_bound;
      const double norm = induced_norm(s.matrix(), space(5, p), trial).lower_bound;
      EXPECT_NEAR(quad, norm, 0.02 * norm) << "p = " << p;
    }
  }
}

// For indefinite symmetric operators outside Hilbert space the norm and the
// quadratic-form supremum differ. In l^1 with dual l^inf, [[0,1],[1,0]] has
// norm max |P_ij| = 1 while sup |2 x1 x2| over the unit 1-sphere is 1/2.
TEST(QuadraticSupTest, IndefiniteOperatorGapInLOne) {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  const SymOperator s(m);
  const double grid_norm = test::grid_sup_2d(
      1.0, [&](const Vector& x) { return (m * x).cwiseAbs().maxCoeff(); });
  const double grid_quad = test::grid_sup_2d(
      1.0, [&](const Vector& x) { return std::abs(x.dot(m * x)); });
  EXPECT_NEAR(grid_norm, 1.0, 1e-9);
  EXPECT_NEAR(grid_quad, 0.5, 1e-9);
  EXPECT_NEAR(induced_norm(m, space(2, 1.0)).lower_bound, 1.0, 1e-12);
  // The maximizer (1/2, 1/2) sits on a face of the l1 ball, away from the
  // vertices the ascent jumps to, so the estimate approaches it from below.
  const double quad = quadratic_sup(s, space(2, 1.0)).lower_bound;
  EXPECT_LE(quad, 0.5 + 1e-15);
  EXPECT_GE(quad, 0.5 * (1.0 - 1e-3));
}

TEST(CheckLsIiTest, Examples) {
  const LsIiReport id = check_ls_ii(SymOperator::identity(2), space(2, 2), 100, 1);
  EXPECT_LE(id.max_violation, 1e-15);
  EXPECT_NEAR(id.norm_used, 1.0, 1e-15);

  Matrix m(2, 2);
  m << 2, 1, 1, 1;
  const LsIiReport r = check_ls_ii(SymOperator(m), space(2, 2), 10000, 2);
  EXPECT_EQ(r.samples, 10000);
  EXPECT_LE(r.max_violation, r.tolerance);
  Eigen::JacobiSVD<Matrix> svd(m);
  EXPECT_NEAR(r.norm_used, svd.singularValues()(0), 1e-12);
}

TEST(CheckLsIiTest, KernelVectorGivesZeroOnBothSides) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 1;
  const Vector x = vec2(0, 1);
  EXPECT_EQ((m * x).squaredNorm(), 0.0);
  EXPECT_EQ(x.dot(m * x), 0.0);
  EXPECT_LE(check_ls_ii(SymOperator(m), space(2, 2), 100, 3).max_violation,
            1e-15);
}

TEST(CheckLsIiTest, RejectsIndefinite) {
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 1, -1;
  try {
    check_ls_ii(SymOperator(d), space(2, 2), 10, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotPsd);
  }
}

TEST(CheckLsIiTest, HoldsForPsdAcrossExponents) {
  std::mt19937_64 rng(12);
  for (double p : {1.0, 1.5, 2.0, 3.0, kInf}) {
    for (int trial = 0; trial < 5; ++trial) {
      const SymOperator s = random_psd(4, 1 + trial % 4, rng);
      const LsIiReport r = check_ls_ii(s, space(4, p), 2000, trial);
      EXPECT_LE(r.max_violation, r.tolerance) << "p = " << p;
    }
  }
}

TEST(NormMonotonicityTest, PsdIncrementsDoNotDecreaseNorm) {
  std::mt19937_64 rng(13);
  for (double p : {1.5, 2.0, 3.0, kInf}) {
    for (int trial = 0; trial < 10; ++trial) {
      const SymOperator a = random_psd(4, 3, rng);
      const SymOperator b = a + random_psd(4, 2, rng);
      const double na = induced_norm(a.matrix(), space(4, p), trial).lower_bound;
      const double nb = induced_norm(b.matrix(), space(4, p), trial).lower_bound;
      EXPECT_LE(na, nb * 1.02);
    }
  }
}

}  // namespace
}  // namespace kleinman
