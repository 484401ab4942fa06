// Acceptance criteria, one per invocation: `acceptance --criterion N`.
// Without arguments every criterion runs. Each prints one PASS/FAIL line and
// the process exits nonzero if any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "kleinman/banach_geometry.h"
#include "kleinman/certify.h"
#include "kleinman/concave_newton.h"
#include "kleinman/lyapunov.h"
#include "kleinman/problems_io.h"
#include "kleinman/random.h"
#include "kleinman/riccati.h"
#include "kleinman/semigroup.h"
#include "test_util.h"

namespace kleinman {
namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool passed = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

constexpr std::uint64_t kSeed = 1;

// Criterion 1.
Outcome scalar_ground_truth() {
  const auto start = Clock::now();
  const StateSpaceSystem sys(Matrix::Constant(1, 1, -1.0),
                             Matrix::Constant(1, 1, 1.0),
                             Matrix::Constant(1, 1, 1.0));
  const RiccatiPipelineResult r = solve_riccati(sys);
  const double elapsed = seconds_since(start);
  // Positive root of -2p - p^2 + 1 = 0.
  const double exact = -1.0 + std::sqrt(2.0);
  const double err = std::abs(r.newton.solution.p(0, 0) - exact);
  return {err <= 1e-10 && elapsed < 0.1,
          fmt::format("|P - (sqrt2 - 1)| = {:.2e}, {:.4f} s", err, elapsed)};
}

struct Run {
  StateSpaceSystem sys;
  RiccatiPipelineResult result;
  SymOperator oracle;
};

// The 50 runs shared by criteria 2-4. The Hamiltonian oracle is computed
// separately from the Newton pipeline.
const std::vector<Run>& oracle_runs(double* seconds = nullptr) {
  static double elapsed = 0.0;
  static const std::vector<Run> runs = [] {
    const auto start = Clock::now();
    std::vector<Run> out;
    for (const StateSpaceSystem& sys : admissible_systems(50, 2, 32, kSeed)) {
      RiccatiPipelineResult r = solve_riccati(sys);
      SymOperator h = hamiltonian_oracle(sys);
      out.push_back({sys, std::move(r), std::move(h)});
    }
    elapsed = seconds_since(start);
    return out;
  }();
  if (seconds) *seconds = elapsed;
  return runs;
}

// Criterion 2.
Outcome oracle_equivalence() {
  double elapsed = 0.0;
  const auto& runs = oracle_runs(&elapsed);
  double worst = 0.0, worst_eig = 0.0;
  int failures = 0, eig_failures = 0;
  for (const Run& run : runs) {
    const Matrix& p = run.result.newton.solution.p.matrix();
    const Matrix& h = run.oracle.matrix();
    const double rel = (p - h).norm() / (1.0 + h.norm());
    worst = std::max(worst, rel);
    failures += !(rel <= 1e-7);
    // Second, independent route: Hamiltonian eigenvectors.
    const Matrix e =
        test::eigenvector_riccati(run.sys.a(), run.sys.b(), run.sys.c());
    const double rel_e = (p - e).norm() / (1.0 + e.norm());
    worst_eig = std::max(worst_eig, rel_e);
    eig_failures += !(rel_e <= 1e-7);
  }
  return {failures == 0 && eig_failures == 0 && elapsed < 60.0,
          fmt::format("{} systems, worst vs Schur oracle {:.2e} ({} over), "
                      "worst vs eigenvector oracle {:.2e} ({} over), {:.2f} s",
                      runs.size(), worst, failures, worst_eig, eig_failures,
                      elapsed)};
}

// Criterion 3.
Outcome monotonicity() {
  int gap_failures = 0, abscissa_failures = 0;
  double worst_gap = std::numeric_limits<double>::infinity();
  double worst_abscissa = -std::numeric_limits<double>::infinity();
  for (const Run& run : oracle_runs()) {
    const auto& it = run.result.newton.iterates;
    const Matrix& nm = run.sys.n_op().matrix();
    const double scale =
        it.size() > 1 ? 1.0 + op_norms(it[1].matrix()).spectral : 1.0;
    for (size_t i = 0; i < it.size(); ++i) {
      const double ab =
          test::max_real_eigenvalue(run.sys.a() - nm * it[i].matrix());
      worst_abscissa = std::max(worst_abscissa, ab);
      abscissa_failures += !(ab < 0.0);
      if (i >= 1 && i + 1 < it.size()) {
        const double gap =
            test::min_eigenvalue(it[i].matrix() - it[i + 1].matrix()) / scale;
        worst_gap = std::min(worst_gap, gap);
        gap_failures += !(gap >= -1e-8);
      }
    }
  }
  return {gap_failures == 0 && abscissa_failures == 0,
          fmt::format("worst lambda_min(P_n - P_n+1)/(1+||P_1||) = {:.2e}, "
                      "max closed-loop abscissa {:.3e}, {} gap and {} "
                      "abscissa failures",
                      worst_gap, worst_abscissa, gap_failures,
                      abscissa_failures)};
}

// Criterion 4.
Outcome quadratic_convergence() {
  int checked = 0, failures = 0, over_budget = 0, max_iter = 0, no_kappa = 0;
  double worst = 0.0;
  for (const Run& run : oracle_runs()) {
    const RiccatiSolution& sol = run.result.newton.solution;
    max_iter = std::max(max_iter, sol.iterations);
    over_budget += sol.iterations > 15;
    if (!sol.kappa) {
      ++no_kappa;
      continue;
    }
    const double kappa = *sol.kappa;
    const Matrix& ref = run.oracle.matrix();
    std::vector<double> e;
    for (const SymOperator& p : run.result.newton.iterates) {
      e.push_back((p.matrix() - ref).norm());
    }
    // Steps whose successor error is at the oracle's own resolution measure
    // rounding, not contraction.
    const double floor =
        std::max(10.0 * e.back(), 1e-12 * (1.0 + ref.norm()));
    for (size_t i = 0; i + 1 < e.size(); ++i) {
      if (e[i] > 1.0 / (2.0 * kappa) || e[i + 1] <= floor) continue;
      ++checked;
      const double ratio = e[i + 1] / (kappa * e[i] * e[i]);
      worst = std::max(worst, ratio);
      failures += !(ratio <= 1.5);
    }
  }
  return {failures == 0 && over_budget == 0 && no_kappa == 0,
          fmt::format("{} in-basin steps, worst e_n+1/(kappa e_n^2) = {:.3f}, "
                      "{} failures; max iterations {} ({} over 15)",
                      checked, worst, failures, max_iter, over_budget)};
}

// Criterion 5.
Outcome wonham() {
  const auto start = Clock::now();
  std::mt19937_64 rng(kSeed);
  int inconsistent = 0, stable_count = 0, wrong_class = 0;
  for (int i = 0; i < 100; ++i) {
    const bool stable = i < 50;
    const Eigen::Index n = 2 + i % 11;
    const Matrix a = random_with_abscissa(n, stable ? -0.5 : 0.5, rng);
    Matrix c;
    do {
      c = random_gaussian(1 + i % 3, n, rng);
    } while (!hautus_detectable(c, a));
    const WonhamReport w = wonham_equivalence(a, c, {}, i);
    inconsistent += !(w.hypothesis_met && w.consistent &&
                      w.cond_i == w.cond_ii && w.cond_ii == w.cond_iii);
    wrong_class += w.cond_ii != stable;
    stable_count += w.cond_ii;
  }
  const double elapsed = seconds_since(start);
  return {inconsistent == 0 && wrong_class == 0 && elapsed < 30.0,
          fmt::format("100 instances ({} stable), {} inconsistent, {:.2f} s",
                      stable_count, inconsistent, elapsed)};
}

// Criterion 6.
Outcome lyapunov_cross_validation() {
  std::mt19937_64 rng(kSeed);
  double worst_diff = 0.0, worst_res = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Eigen::Index n = 2 + (i * 28) / 49;
    const Matrix a = random_with_abscissa(n, -0.5, rng);
    const SymOperator q = random_psd(n, n, rng);
    const SymOperator ps = solve_lyapunov(a, q, LyapunovMethod::kSchur);
    const SymOperator pk = solve_lyapunov(a, q, LyapunovMethod::kKron);
    worst_diff = std::max(worst_diff, (ps - pk).matrix().norm() /
                                          pk.matrix().norm());
    for (const SymOperator* p : {&ps, &pk}) {
      const Matrix res =
          a.transpose() * p->matrix() + p->matrix() * a + q.matrix();
      worst_res = std::max(
          worst_res, res.norm() / (1.0 + q.matrix().norm() +
                                   a.norm() * p->matrix().norm()));
    }
  }
  return {worst_diff <= 1e-8 && worst_res <= 1e-10,
          fmt::format("50 problems, worst relative difference {:.2e}, worst "
                      "relative residual {:.2e}",
                      worst_diff, worst_res)};
}

// Criterion 7.
Outcome semigroup_properties() {
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> time(0.0, 3.0);
  std::uniform_real_distribution<double> half(0.0, 2.0);
  int positivity = 0, law = 0;
  for (int i = 0; i < 100; ++i) {
    Matrix a = random_gaussian(4, 4, rng);
    a *= half(rng) / op_norms(a).spectral * 2.5;  // ||A||_2 <= 5
    const SymOperator p = random_psd(4, 1 + i % 4, rng);
    const double t = time(rng), s = half(rng), u = half(rng);
    positivity += !is_psd(lyapunov_semigroup_apply(a, p, t));
    const Matrix e = expm(a, s) * expm(a, u);
    const Matrix f = expm(a, s + u);
    law += !((e - f).norm() <= 1e-9 * f.norm());
    const SymOperator two =
        lyapunov_semigroup_apply(a, lyapunov_semigroup_apply(a, p, s), u);
    const SymOperator one = lyapunov_semigroup_apply(a, p, s + u);
    law += !((two - one).matrix().norm() <=
             1e-8 * std::max(1.0, one.matrix().norm()));
  }
  double lo = 1e300, hi = 0.0;
  for (int i = 0; i < 10; ++i) {
    Matrix a = random_gaussian(4, 4, rng);
    a *= 2.0 / op_norms(a).spectral;
    const SymOperator p = random_psd(4, 4, rng);
    const Matrix gen = a.transpose() * p.matrix() + p.matrix() * a;
    auto err = [&](double h) {
      return ((lyapunov_semigroup_apply(a, p, h).matrix() - p.matrix()) / h -
              gen)
          .norm();
    };
    const double ratio = err(1e-4) / err(1e-5);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  return {positivity == 0 && law == 0 && lo >= 8.0 && hi <= 12.0,
          fmt::format("positivity failures {}, semigroup-law failures {}, "
                      "finite-difference ratios in [{:.3f}, {:.3f}]",
                      positivity, law, lo, hi)};
}

// Criterion 8.
Outcome banach_geometry() {
  std::mt19937_64 rng(kSeed);
  const double kInf = std::numeric_limits<double>::infinity();
  int sym_total = 0, sym_miss = 0, exact_miss = 0;
  double worst_gap = 0.0;
  for (double p : {1.5, 2.0, 3.0, kInf}) {
    for (Eigen::Index n = 2; n <= 8; ++n) {
      const SymOperator s = random_symmetric(n, rng);
      const LpSpace space{n, Exponent::from_double(p)};
      const double norm = induced_norm(s.matrix(), space, n).lower_bound;
      const double quad = quadratic_sup(s, space, n).lower_bound;
      const double gap = std::abs(norm - quad) / norm;
      ++sym_total;
      worst_gap = std::max(worst_gap, gap);
      sym_miss += !(gap <= 0.02);
      if (p == 2.0) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(s.matrix());
        const double exact = es.eigenvalues().cwiseAbs().maxCoeff();
        exact_miss += !(std::abs(norm - exact) <= 1e-10 * exact &&
                        std::abs(quad - exact) <= 1e-10 * exact);
      }
    }
  }
  int violations = 0;
  for (double p : {1.0, 1.5, 2.0, 3.0, kInf}) {
    for (int k = 0; k < 4; ++k) {
      const SymOperator s = random_psd(4, 1 + k, rng);
      const LsIiReport r =
          check_ls_ii(s, LpSpace{4, Exponent::from_double(p)}, 10000, k);
      violations += !(r.max_violation <= r.tolerance);
    }
  }
  int monotone_miss = 0;
  for (int k = 0; k < 50; ++k) {
    const Eigen::Index n = 2 + k % 4;
    const SymOperator a = random_psd(n, n, rng);
    const SymOperator b = a + random_psd(n, 1 + k % n, rng);
    const LpSpace space{n, Exponent::from_double(k % 2 ? 3.0 : 1.5)};
    monotone_miss += !(induced_norm(a.matrix(), space, k).lower_bound <=
                       1.02 * induced_norm(b.matrix(), space, k).lower_bound);
  }
  return {sym_miss == 0 && exact_miss == 0 && violations == 0 &&
              monotone_miss == 0,
          fmt::format("(i) {}/{} symmetric cases beyond 2% (worst {:.1f}%), "
                      "p=2 exact misses {}; (ii) {} violating (P,p) pairs; "
                      "monotone misses {}",
                      sym_miss, sym_total, 100.0 * worst_gap, exact_miss,
                      violations, monotone_miss)};
}

// Criterion 9.
Outcome regularized_sqrt() {
  int failures = 0;
  double worst_id = 0.0, worst_res = 0.0;
  const double root = std::sqrt(2.0) - 1.0;
  for (Eigen::Index n : {1, 3, 8}) {
    const ConcaveSolveResult r = solve_regularized_sqrt(
        SymOperator::identity(n), SymOperator::identity(n), 1.0);
    const Matrix& p = r.x.matrix();
    worst_id = std::max(
        worst_id, (p - root * Matrix::Identity(n, n)).cwiseAbs().maxCoeff());
    const double res = (p * p + 2.0 * p - Matrix::Identity(n, n)).norm();
    worst_res = std::max(worst_res, res / (1.0 + std::sqrt(double(n))));
  }
  std::mt19937_64 rng(kSeed);
  for (int i = 0; i < 20; ++i) {
    const Eigen::Index n = 1 + i % 8;
    const SymOperator nm = random_psd(n, 1 + i % n, rng);
    const SymOperator q = random_psd(n, n, rng);
    try {
      const ConcaveSolveResult r = solve_regularized_sqrt(nm, q, 1.0);
      const Matrix& p = r.x.matrix();
      const double res =
          (p * nm.matrix() * p + 2.0 * p - q.matrix()).norm() /
          (1.0 + q.matrix().norm());
      worst_res = std::max(worst_res, res);
    } catch (const Error&) {
      ++failures;
    }
  }
  return {failures == 0 && worst_id <= 1e-10 && worst_res <= 1e-10,
          fmt::format("identity cases max |P - (sqrt2-1) I| = {:.2e}, worst "
                      "relative residual {:.2e}, {} rejected runs",
                      worst_id, worst_res, failures)};
}

// Criterion 10.
Outcome dichotomous() {
  Matrix a(2, 2);
  a << -1, 0, 0, 2;
  Matrix b(2, 1);
  b << 0, 1;
  const Matrix k = dichotomous_gain(Matrix::Constant(1, 1, -1.0),
                                    Matrix::Constant(1, 1, 2.0), b);
  Matrix target(2, 2);
  target << -1, 0, 0, -1;
  const double err = (a - b * k - target).cwiseAbs().maxCoeff();
  bool rejected = false;
  try {
    Matrix b2(2, 1);
    b2 << 1, 0;
    dichotomous_gain(Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, 2.0),
                     b2);
  } catch (const Error& e) {
    rejected = e.code() == ErrorCode::kRangeConditionFailed;
  }
  return {err <= 1e-12 && rejected,
          fmt::format("max |A - BK - diag(-1,-1)| = {:.2e}, range condition "
                      "{}",
                      err, rejected ? "rejected" : "NOT rejected")};
}

// Criterion 11.
Outcome heat() {
  const auto start = Clock::now();
  const Eigen::Index n = 32;
  const double c = heat_shift_for_abscissa(n, 1.0, 5.0);
  const StateSpaceSystem sys = heat_demo(n, c, 1.0, {0}, {n - 1});
  const double open = test::max_real_eigenvalue(sys.a());
  const RiccatiPipelineResult r = solve_riccati(sys);
  const double elapsed = seconds_since(start);
  const Matrix& p = r.newton.solution.p.matrix();
  const double closed =
      test::max_real_eigenvalue(sys.a() - sys.b() * sys.b().transpose() * p);
  const double res = test::care_residual(sys.a(), sys.b(), sys.c(), p).norm() /
                     (1.0 + sys.q_op().matrix().norm() +
                      2.0 * sys.a().norm() * p.norm() +
                      sys.n_op().matrix().norm() * p.norm() * p.norm());
  return {std::abs(open - 5.0) < 1e-6 && closed < 0.0 && res <= 1e-8 &&
              elapsed < 5.0,
          fmt::format("open-loop abscissa {:.6f}, closed-loop {:.4f}, "
                      "relative residual {:.2e}, {:.3f} s",
                      open, closed, res, elapsed)};
}

// Criterion 12.
Outcome certify_and_mutation() {
  const CertifyReport clean = run_certification({});
  std::string failed;
  for (const SuiteResult& s : clean.suites) {
    if (!s.passed) failed += fmt::format(" {}", s.id);
  }
  CertifyOptions mutated;
  mutated.fault = FaultInjection::kFlipQuadraticTerm;
  const CertifyReport fault = run_certification(mutated);
  int caught = 0;
  for (const SuiteResult& s : fault.suites) caught += !s.passed;
  const bool clean_ok = clean.all_passed();
  const bool mutation_ok = caught > 0;
  return {clean_ok && mutation_ok,
          fmt::format("clean run {} (failing suites:{}); flipped sign caught "
                      "by {} suites",
                      clean_ok ? "exits 0" : "does NOT exit 0",
                      failed.empty() ? " none" : failed, caught)};
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, "scalar ground truth", scalar_ground_truth},
      {2, "oracle equivalence", oracle_equivalence},
      {3, "monotone iterates", monotonicity},
      {4, "quadratic convergence", quadratic_convergence},
      {5, "stability equivalence", wonham},
      {6, "Lyapunov cross-validation", lyapunov_cross_validation},
      {7, "Lyapunov semigroup", semigroup_properties},
      {8, "Banach geometry", banach_geometry},
      {9, "regularized square root", regularized_sqrt},
      {10, "dichotomous gain", dichotomous},
      {11, "heat equation", heat},
      {12, "certify and mutation", certify_and_mutation},
  };
  return all;
}

}  // namespace
}  // namespace kleinman

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> selected;
  app.add_option("--criterion", selected, "Criterion ids (default: all)")
      ->check(CLI::Range(1, 12));
  CLI11_PARSE(app, argc, argv);

  bool all_passed = true;
  for (const auto& c : kleinman::criteria()) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), c.id) == selected.end()) {
      continue;
    }
    kleinman::Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, fmt::format("error: {}", e.what())};
    }
    all_passed = all_passed && o.passed;
    std::printf("[%s] criterion %2d %-26s %s\n", o.passed ? "PASS" : "FAIL",
                c.id, c.title, o.detail.c_str());
    std::fflush(stdout);
  }
  return all_passed ? 0 : 1;
}
