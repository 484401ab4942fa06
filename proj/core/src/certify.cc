#include "kleinman/certify.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>

#include <fmt/format.h>

#include "kleinman/banach_geometry.h"
#include "kleinman/concave_newton.h"
#include "kleinman/lyapunov.h"
#include "kleinman/problems_io.h"
#include "kleinman/random.h"
#include "kleinman/semigroup.h"

namespace kleinman {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

SolverConfig solver_config(const CertifyOptions& options) {
  SolverConfig cfg;
  cfg.seed = options.seed;
  cfg.fault = options.fault;
  return cfg;
}

// One Riccati run of the oracle batch, shared by suites 2-4.
struct OracleRun {
  Eigen::Index n = 0;
  RiccatiPipelineResult result;
};

std::vector<OracleRun> oracle_runs(const CertifyOptions& options) {
  SolverConfig cfg = solver_config(options);
  cfg.oracle = true;
  std::vector<OracleRun> runs;
  for (const StateSpaceSystem& sys :
       admissible_systems(50, 2, 32, options.seed)) {
    runs.push_back({sys.n(), solve_riccati(sys, cfg)});
  }
  return runs;
}

// Suite 1: scalar ground truth.
void suite_scalar(const CertifyOptions& options, SuiteResult& out) {
  const auto start = Clock::now();
  const StateSpaceSystem sys(Matrix::Constant(1, 1, -1.0),
                             Matrix::Constant(1, 1, 1.0),
                             Matrix::Constant(1, 1, 1.0));
  const RiccatiPipelineResult r = solve_riccati(sys, solver_config(options));
  const double elapsed = seconds_since(start);
  const double err = std::abs(r.newton.solution.p(0, 0) - (std::sqrt(2.0) - 1.0));
  out.passed = err <= 1e-10 && elapsed < 0.1;
  out.detail = fmt::format("|P - (sqrt2 - 1)| = {:.2e}, {:.4f} s", err, elapsed);
}

// Suite 2: Newton vs Hamiltonian oracle.
void suite_oracle(const CertifyOptions& options, SuiteResult& out) {
  const auto start = Clock::now();
  const auto runs = oracle_runs(options);
  const double elapsed = seconds_since(start);
  double worst = 0.0;
  int failures = 0;
  for (const OracleRun& run : runs) {
    const Matrix& p = run.result.newton.solution.p.matrix();
    const Matrix& o = run.result.oracle->matrix();
    const double rel = (p - o).norm() / (1.0 + o.norm());
    worst = std::max(worst, rel);
    if (!(rel <= 1e-7)) ++failures;
  }
  out.passed = failures == 0 && elapsed < 60.0;
  out.detail = fmt::format("{} systems, worst ||P - P_H||_F/(1+||P_H||_F) = "
                           "{:.2e}, {} failures, {:.2f} s",
                           runs.size(), worst, failures, elapsed);
}

// Suite 3: monotone iterates and stabilizing chain.
void suite_monotone(const CertifyOptions& options, SuiteResult& out) {
  int gap_failures = 0, abscissa_failures = 0;
  double worst_gap = std::numeric_limits<double>::infinity();
  double worst_abscissa = -std::numeric_limits<double>::infinity();
  const auto runs = oracle_runs(options);
  for (const OracleRun& run : runs) {
    const auto& it = run.result.newton.iterates;
    const auto& steps = run.result.newton.trace.steps;
    const double scale = it.size() > 1 ? 1.0 + spectral_norm(it[1].matrix())
                                       : 1.0;
    for (size_t k = 1; k + 1 < it.size(); ++k) {
      const double gap = lambda_min(it[k] - it[k + 1]);
      worst_gap = std::min(worst_gap, gap / scale);
      if (gap < -1e-8 * scale) ++gap_failures;
    }
    for (const IterationStep& s : steps) {
      worst_abscissa = std::max(worst_abscissa, s.abscissa);
      if (!(s.abscissa < 0.0)) ++abscissa_failures;
    }
  }
  out.passed = gap_failures == 0 && abscissa_failures == 0;
  out.detail = fmt::format("worst lambda_min(P_n - P_n+1)/(1+||P_1||) = "
                           "{:.2e}, max closed-loop abscissa = {:.3e}, {} gap "
                           "and {} abscissa failures",
                           worst_gap, worst_abscissa, gap_failures,
                           abscissa_failures);
}

// Suite 4: quadratic convergence within the kappa basin.
void suite_quadratic(const CertifyOptions& options, SuiteResult& out) {
  int failures = 0, checked = 0, max_iter = 0, over_iter = 0;
  double worst = 0.0;
  const auto runs = oracle_runs(options);
  for (const OracleRun& run : runs) {
    const RiccatiSolution& sol = run.result.newton.solution;
    max_iter = std::max(max_iter, sol.iterations);
    if (sol.iterations > 15) ++over_iter;
    if (!sol.kappa) {
      ++failures;
      continue;
    }
    const QuadraticConvergenceReport q = quadratic_convergence_check(
        run.result.newton.trace, *run.result.oracle, *sol.kappa);
    checked += q.checked;
    worst = std::max(worst, q.worst_ratio);
    if (!q.passed) ++failures;
  }
  out.passed = failures == 0 && over_iter == 0;
  out.detail = fmt::format("{} in-basin steps checked, worst e_n+1/(kappa "
                           "e_n^2) = {:.3f}, max iterations {}, {} failures",
                           checked, worst, max_iter, failures + over_iter);
}

// Suite 5: three-way stability equivalence.
void suite_wonham(const CertifyOptions& options, SuiteResult& out) {
  const auto start = Clock::now();
  std::mt19937_64 rng(options.seed + 5);
  int inconsistent = 0, undecidable = 0, unmet = 0, stable = 0;
  for (int i = 0; i < 100; ++i) {
    const bool want_stable = i < 50;
    const Eigen::Index n = 2 + i % 11;
    Matrix a, c;
    do {
      a = random_with_abscissa(n, want_stable ? -0.5 : 0.5, rng);
      c = random_gaussian(1 + i % 3, n, rng);
    } while (!hautus_detectable(c, a));
    const WonhamReport r = wonham_equivalence(a, c, {}, options.seed + i);
    if (!r.hypothesis_met) ++unmet;
    if (!r.cond_i_decidable) ++undecidable;
    if (!(r.cond_i == r.cond_ii && r.cond_ii == r.cond_iii)) ++inconsistent;
    if (r.cond_ii) ++stable;
  }
  const double elapsed = seconds_since(start);
  out.passed = inconsistent == 0 && undecidable == 0 && unmet == 0 &&
               stable == 50 && elapsed < 30.0;
  out.detail = fmt::format("100 instances ({} stable), {} inconsistent, {} "
                           "undecidable, {:.2f} s",
                           stable, inconsistent, undecidable, elapsed);
}

// Suite 6: Schur vs Kronecker Lyapunov solves.
void suite_lyapunov(const CertifyOptions& options, SuiteResult& out) {
  std::mt19937_64 rng(options.seed + 6);
  double worst_diff = 0.0, worst_res = 0.0;
  int failures = 0;
  for (int i = 0; i < 50; ++i) {
    const Eigen::Index n = 2 + (i * 28) / 49;
    const Matrix a = random_with_abscissa(n, -0.5, rng);
    const SymOperator q = random_psd(n, n, rng);
    const SymOperator ps = solve_lyapunov(a, q, LyapunovMethod::kSchur);
    const SymOperator pk = solve_lyapunov(a, q, LyapunovMethod::kKron);
    const double diff = (ps.matrix() - pk.matrix()).norm() /
                        std::max(1.0, pk.matrix().norm());
    for (const SymOperator* p : {&ps, &pk}) {
      const double res =
          lyapunov_residual(a, p->matrix(), q.matrix()) /
          (1.0 + q.matrix().norm() + a.norm() * p->matrix().norm());
      worst_res = std::max(worst_res, res);
      if (!(res <= 1e-10)) ++failures;
    }
    worst_diff = std::max(worst_diff, diff);
    if (!(diff <= 1e-8)) ++failures;
  }
  out.passed = failures == 0;
  out.detail = fmt::format("50 problems, worst relative difference {:.2e}, "
                           "worst relative residual {:.2e}",
                           worst_diff, worst_res);
}

// Suite 7: Lyapunov semigroup positivity, semigroup law, generator.
void suite_semigroup(const CertifyOptions& options, SuiteResult& out) {
  std::mt19937_64 rng(options.seed + 7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int positivity = 0, law = 0;
  double worst_law = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Eigen::Index n = 2 + i % 7;
    Matrix a = random_gaussian(n, n, rng);
    a *= 2.0 / std::max(1.0, spectral_norm(a));
    const SymOperator p = random_psd(n, 1 + i % n, rng);
    const double t = 3.0 * unit(rng);
    const double s = 2.0 * unit(rng);
    const double u = 2.0 * unit(rng);
    if (!is_psd(lyapunov_semigroup_apply(a, p, t))) ++positivity;
    const SymOperator two_step =
        lyapunov_semigroup_apply(a, lyapunov_semigroup_apply(a, p, s), u);
    const SymOperator one_step = lyapunov_semigroup_apply(a, p, s + u);
    const double rel = (two_step.matrix() - one_step.matrix()).norm() /
                       std::max(1.0, one_step.matrix().norm());
    worst_law = std::max(worst_law, rel);
    if (!(rel <= 1e-8)) ++law;
  }

  int ratio_failures = 0;
  double ratio_min = std::numeric_limits<double>::infinity();
  double ratio_max = 0.0;
  for (int i = 0; i < 10; ++i) {
    const Eigen::Index n = 3 + i % 4;
    const Matrix a = random_gaussian(n, n, rng);
    const SymOperator p = random_psd(n, n, rng);
    const Matrix gen = a.transpose() * p.matrix() + p.matrix() * a;
    auto fd_error = [&](double h) {
      const Matrix d =
          (lyapunov_semigroup_apply(a, p, h).matrix() - p.matrix()) / h;
      return (d - gen).norm();
    };
    const double ratio = fd_error(1e-4) / fd_error(1e-5);
    ratio_min = std::min(ratio_min, ratio);
    ratio_max = std::max(ratio_max, ratio);
    if (!(ratio >= 8.0 && ratio <= 12.0)) ++ratio_failures;
  }
  out.passed = positivity == 0 && law == 0 && ratio_failures == 0;
  out.detail = fmt::format("positivity failures {}, worst semigroup-law error "
                           "{:.2e}, finite-difference ratios in [{:.3f}, "
                           "{:.3f}]",
                           positivity, worst_law, ratio_min, ratio_max);
}

// Suite 8: norm and order identities on l^p.
void suite_banach(const CertifyOptions& options, SuiteResult& out) {
  const std::vector<Exponent> exponents = {
      Exponent::finite(1.5), Exponent::finite(2.0), Exponent::finite(3.0),
      Exponent::infinity()};
  std::mt19937_64 rng(options.seed + 8);

  // (i) sup |<Px, x>| = ||P|| for symmetric P.
  int agree_fail = 0, agree_total = 0, order_fail = 0, exact_fail = 0;
  int psd_fail = 0, psd_total = 0;
  double worst_gap = 0.0, worst_psd_gap = 0.0;
  for (const Exponent& p : exponents) {
    for (Eigen::Index n = 2; n <= 8; ++n) {
      const LpSpace space{n, p};
      for (const bool psd : {false, true}) {
        const SymOperator sym =
            psd ? random_psd(n, n, rng) : random_symmetric(n, rng);
        const std::uint64_t seed = options.seed + static_cast<std::uint64_t>(n);
        const double quad = quadratic_sup(sym, space, seed).lower_bound;
        const double norm = induced_norm(sym.matrix(), space, seed).lower_bound;
        const double gap = (norm - quad) / std::max(norm, 1e-300);
        if (quad > norm * (1.0 + 1e-10)) ++order_fail;
        if (p.value() == 2.0 && std::abs(gap) > 1e-10) ++exact_fail;
        if (psd) {
          ++psd_total;
          worst_psd_gap = std::max(worst_psd_gap, gap);
          if (gap > 0.02) ++psd_fail;
        } else {
          ++agree_total;
          worst_gap = std::max(worst_gap, gap);
          if (gap > 0.02) ++agree_fail;
        }
      }
    }
  }

  // (ii) ||Px||_q^2 <= ||P|| <Px, x> for PSD P.
  int ls_fail = 0;
  double worst_violation = -std::numeric_limits<double>::infinity();
  for (const Exponent& p : exponents) {
    for (const Eigen::Index n : {2, 4, 8}) {
      const SymOperator psd = random_psd(n, 1 + n / 2, rng);
      const LsIiReport r =
          check_ls_ii(psd, {n, p}, 10000, options.seed + static_cast<std::uint64_t>(n));
      worst_violation = std::max(worst_violation, r.max_violation);
      if (r.max_violation > r.tolerance) ++ls_fail;
    }
  }

  // Monotone norm on PSD pairs P <= R.
  int mono_fail = 0;
  for (int i = 0; i < 50; ++i) {
    const Eigen::Index n = 2 + i % 7;
    const SymOperator lo = random_psd(n, n, rng);
    const SymOperator hi = lo + random_psd(n, 1 + i % n, rng);
    const LpSpace space{n, exponents[static_cast<size_t>(i) % exponents.size()]};
    const double a = induced_norm(lo.matrix(), space, options.seed).lower_bound;
    const double b = induced_norm(hi.matrix(), space, options.seed).lower_bound;
    if (a > b * 1.02) ++mono_fail;
  }

  out.passed = agree_fail == 0 && order_fail == 0 && exact_fail == 0 &&
               ls_fail == 0 && mono_fail == 0;
  out.detail = fmt::format(
      "(i) symmetric: {}/{} beyond 2% (worst {:.1f}%), PSD subset {}/{} "
      "(worst {:.2f}%), p=2 exact misses {}; (ii) violations {} (max {:.2e}); "
      "monotone misses {}",
      agree_fail, agree_total, 100.0 * worst_gap, psd_fail, psd_total,
      100.0 * worst_psd_gap, exact_fail, ls_fail, worst_violation, mono_fail);
}

// Suite 9: the regularized square-root equation.
void suite_sqrt(const CertifyOptions& options, SuiteResult& out) {
  const SolverConfig cfg = solver_config(options);
  int failures = 0;
  double worst_res = 0.0, worst_err = 0.0;
  auto residual = [](const SymOperator& n, const SymOperator& q, double a,
                     const Matrix& p) {
    return (p * n.matrix() * p + 2.0 * a * p - q.matrix()).norm() /
           (1.0 + q.matrix().norm());
  };
  for (const Eigen::Index n : {1, 3, 8}) {
    const SymOperator id = SymOperator::identity(n);
    const ConcaveSolveResult r = solve_regularized_sqrt(id, id, 1.0, cfg);
    const double err =
        (r.x.matrix() - (std::sqrt(2.0) - 1.0) * Matrix::Identity(n, n))
            .cwiseAbs()
            .maxCoeff();
    const double res = residual(id, id, 1.0, r.x.matrix());
    worst_err = std::max(worst_err, err);
    worst_res = std::max(worst_res, res);
    if (!(err <= 1e-10 && res <= 1e-10)) ++failures;
  }
  std::mt19937_64 rng(options.seed + 9);
  std::uniform_real_distribution<double> a_dist(0.25, 4.0);
  for (int i = 0; i < 20; ++i) {
    const Eigen::Index n = 1 + i % 8;
    const SymOperator nm = random_psd(n, 1 + i % n, rng);
    const SymOperator q = random_psd(n, n, rng);
    const double a = a_dist(rng);
    const ConcaveSolveResult r = solve_regularized_sqrt(nm, q, a, cfg);
    const double res = residual(nm, q, a, r.x.matrix());
    worst_res = std::max(worst_res, res);
    if (!(res <= 1e-10) || !is_psd(r.x)) ++failures;
  }
  out.passed = failures == 0;
  out.detail = fmt::format("identity cases max |P - (sqrt2-1) I| = {:.2e}, "
                           "worst relative residual {:.2e}, {} failures",
                           worst_err, worst_res, failures);
}

// Suite 10: the dichotomous gain.
void suite_dichotomous(const CertifyOptions&, SuiteResult& out) {
  const Matrix a_minus = Matrix::Constant(1, 1, -1.0);
  const Matrix a_plus = Matrix::Constant(1, 1, 2.0);
  Matrix b(2, 1);
  b << 0.0, 1.0;
  const Matrix k = dichotomous_gain(a_minus, a_plus, b);
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = -1.0;
  a(1, 1) = 2.0;
  const double err =
      (a - b * k - Vector::Constant(2, -1.0).asDiagonal().toDenseMatrix())
          .cwiseAbs()
          .maxCoeff();
  bool range_rejected = false;
  try {
    Matrix b_bad(2, 1);
    b_bad << 1.0, 0.0;
    dichotomous_gain(a_minus, a_plus, b_bad);
  } catch (const Error& e) {
    range_rejected = e.code() == ErrorCode::kRangeConditionFailed;
  }
  out.passed = err <= 1e-12 && range_rejected;
  out.detail = fmt::format("max |A - BK - diag(-1,-1)| = {:.2e}, range "
                           "condition {}",
                           err, range_rejected ? "rejected" : "NOT rejected");
}

// Suite 11: destabilized heat equation.
void suite_heat(const CertifyOptions& options, SuiteResult& out) {
  const auto start = Clock::now();
  const Eigen::Index n = 32;
  const double c = heat_shift_for_abscissa(n, 1.0, 5.0);
  const StateSpaceSystem sys = heat_demo(n, c, 1.0, {0}, {n - 1});
  const double open = spectral_abscissa(sys.a()).abscissa;
  const RiccatiPipelineResult r = solve_riccati(sys, solver_config(options));
  const double elapsed = seconds_since(start);
  const RiccatiSolution& sol = r.newton.solution;
  out.passed = std::abs(open - 5.0) <= 1e-6 * 5.0 &&
               sol.closed_loop_abscissa < 0.0 &&
               sol.relative_residual <= 1e-8 && elapsed < 5.0;
  out.detail = fmt::format("open-loop abscissa {:.6f}, closed-loop {:.4f}, "
                           "relative residual {:.2e}, {} iterations, {:.3f} s",
                           open, sol.closed_loop_abscissa,
                           sol.relative_residual, sol.iterations, elapsed);
}

// Suite 12: mutation detection.
void suite_mutation(const CertifyOptions& options, SuiteResult& out) {
  CertifyOptions mutated = options;
  mutated.fault = FaultInjection::kFlipQuadraticTerm;
  mutated.suites.clear();
  std::vector<int> caught;
  for (int id = 1; id <= 11; ++id) {
    if (!run_suite(id, mutated).passed) caught.push_back(id);
  }
  out.passed = !caught.empty();
  out.detail = caught.empty()
                   ? std::string("flipped P N P sign went undetected")
                   : fmt::format("flipped P N P sign caught by suites {}",
                                 fmt::join(caught, ","));
}

using SuiteFn = void (*)(const CertifyOptions&, SuiteResult&);

struct SuiteEntry {
  std::string_view name;
  SuiteFn fn;
};

constexpr SuiteEntry kSuites[kNumSuites] = {
    {"scalar ground truth", suite_scalar},
    {"oracle equivalence", suite_oracle},
    {"monotone iterates", suite_monotone},
    {"quadratic convergence", suite_quadratic},
    {"stability equivalence", suite_wonham},
    {"Lyapunov cross-validation", suite_lyapunov},
    {"Lyapunov semigroup", suite_semigroup},
    {"Banach geometry", suite_banach},
    {"regularized square root", suite_sqrt},
    {"dichotomous gain", suite_dichotomous},
    {"heat equation", suite_heat},
    {"mutation detection", suite_mutation},
};

}  // namespace

bool CertifyReport::all_passed() const {
  return std::all_of(suites.begin(), suites.end(),
                     [](const SuiteResult& s) { return s.passed; });
}

std::string_view suite_name(int id) {
  if (id < 1 || id > kNumSuites) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("no certification suite {}", id));
  }
  return kSuites[id - 1].name;
}

SuiteResult run_suite(int id, const CertifyOptions& options) {
  SuiteResult out;
  out.id = id;
  out.name = std::string(suite_name(id));
  const auto start = Clock::now();
  try {
    kSuites[id - 1].fn(options, out);
  } catch (const Error& e) {
    out.passed = false;
    out.detail = fmt::format("error: {}", e.what());
  }
  out.seconds = seconds_since(start);
  return out;
}

CertifyReport run_certification(const CertifyOptions& options) {
  std::vector<int> ids = options.suites;
  if (ids.empty()) {
    for (int id = 1; id <= 11; ++id) ids.push_back(id);
  }
  CertifyReport report;
  for (const int id : ids) report.suites.push_back(run_suite(id, options));
  return report;
}

std::vector<StateSpaceSystem> admissible_systems(int count, Eigen::Index n_min,
                                                 Eigen::Index n_max,
                                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  constexpr double kAbscissas[] = {-1.0, 0.5, 2.0};
  std::vector<StateSpaceSystem> out;
  for (int i = 0; i < count; ++i) {
    const Eigen::Index n =
        count > 1 ? n_min + (i * (n_max - n_min)) / (count - 1) : n_min;
    // Inputs and outputs grow with n. With a fixed handful of inputs and
    // most modes unstable, the Bass gain grows to ~1e6 by n = 14.
    const Eigen::Index m = std::max<Eigen::Index>(1, n / 2);
    const Eigen::Index p = m;
    for (;;) {
      Matrix a = random_with_abscissa(n, kAbscissas[i % 3], rng);
      Matrix b = random_gaussian(n, m, rng);
      Matrix c = random_gaussian(p, n, rng);
      if (hautus_stabilizable(a, b) && hautus_detectable(c, a)) {
        out.emplace_back(std::move(a), std::move(b), std::move(c));
        break;
      }
    }
  }
  return out;
}

}  // namespace kleinman
