#include "kleinman/cli.h"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "CLI11.hpp"
#include "kleinman/certify.h"
#include "kleinman/concave_newton.h"
#include "kleinman/lyapunov.h"
#include "kleinman/semigroup.h"

namespace kleinman {

int exit_code_for(const Error& error) {
  return is_input_error(error.code()) ? kExitInputError : kExitSolverError;
}

namespace {

ResultFile base_result(const ProblemFile& problem, const SolverConfig& cfg) {
  ResultFile r;
  r.name = problem.name;
  r.mode = std::string(to_string(problem.mode));
  r.config = cfg;
  r.version = std::string(version());
  return r;
}

ResultFile run_riccati(const ProblemFile& problem, const SolverConfig& cfg) {
  const StateSpaceSystem sys = problem.system();
  const RiccatiPipelineResult pipe = solve_riccati(sys, cfg, problem.k0);
  const RiccatiSolution& sol = pipe.newton.solution;
  ResultFile r = base_result(problem, cfg);
  r.mode = "riccati";
  r.p = sol.p.matrix();
  r.k = sol.k;
  r.residual = sol.residual;
  r.relative_residual = sol.relative_residual;
  r.iterations = sol.iterations;
  r.stop_reason = std::string(to_string(sol.stop_reason));
  r.kappa = sol.kappa;
  r.closed_loop_abscissa = sol.closed_loop_abscissa;
  r.trace = pipe.newton.trace;
  return r;
}

SymOperator lyapunov_rhs(const ProblemFile& problem) {
  if (problem.q_mat) return SymOperator(*problem.q_mat);
  if (problem.c) {
    return SymOperator::symmetrized(problem.c->transpose() * *problem.c);
  }
  throw Error(ErrorCode::kMissingField,
              "field \"Q\" (or \"C\") is required for a Lyapunov solve");
}

ResultFile run_lyapunov(const ProblemFile& problem, const SolverConfig& cfg) {
  if (!problem.a) {
    throw Error(ErrorCode::kMissingField, "field \"A\" is required");
  }
  const SymOperator q = lyapunov_rhs(problem);
  const SymOperator p = solve_lyapunov(*problem.a, q, cfg.method);
  ResultFile r = base_result(problem, cfg);
  r.mode = "lyapunov";
  r.p = p.matrix();
  r.residual = lyapunov_residual(*problem.a, p.matrix(), q.matrix());
  r.relative_residual =
      r.residual /
      (1.0 + q.matrix().norm() + problem.a->norm() * p.matrix().norm());
  return r;
}

ResultFile run_sqrt(const ProblemFile& problem, const SolverConfig& cfg) {
  if (!problem.reg_a) {
    throw Error(ErrorCode::kMissingField, "field \"a\" is required");
  }
  if (!problem.n_mat) {
    throw Error(ErrorCode::kMissingField, "field \"N\" is required");
  }
  if (!problem.q_mat) {
    throw Error(ErrorCode::kMissingField, "field \"Q\" is required");
  }
  const SymOperator n(*problem.n_mat);
  const SymOperator q(*problem.q_mat);
  const double a = *problem.reg_a;
  const ConcaveSolveResult sol = solve_regularized_sqrt(n, q, a, cfg);
  ResultFile r = base_result(problem, cfg);
  r.mode = "sqrt";
  r.p = sol.x.matrix();
  r.residual = sol.residual;
  const double np = r.p.norm();
  r.relative_residual = sol.residual / (1.0 + q.matrix().norm() +
                                        2.0 * a * np +
                                        n.matrix().norm() * np * np);
  r.iterations = sol.iterations;
  r.trace = sol.trace;
  return r;
}

// --- output helpers ---------------------------------------------------------

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("cannot write \"{}\"", path));
  }
  file << text;
}

struct CommonOptions {
  SolverConfig cfg;
  std::string method = "schur";
  std::string out_path;
  std::string trace_path;
};

SolverConfig finalize(CommonOptions& opts) {
  opts.cfg.method =
      opts.method == "kron" ? LyapunovMethod::kKron : LyapunovMethod::kSchur;
  opts.cfg.validate();
  return opts.cfg;
}

void write_outputs(const ResultFile& r, const CommonOptions& opts,
                   std::ostream& out, std::ostream& err) {
  emit(write_result(r), opts.out_path, out);
  if (!opts.trace_path.empty()) {
    emit(write_trace_csv(r.trace), opts.trace_path, out);
  }
  fmt::print(err, "{}: {} residual {:.3e} (relative {:.3e}), {} iterations\n",
             r.name, r.mode, r.residual, r.relative_residual, r.iterations);
}

// stability-check: abscissa, Datko integrals on the basis vectors, the
// three-way equivalence and the sampled L2 detector diagnostic.
std::string stability_report(const ProblemFile& problem, std::uint64_t seed) {
  if (!problem.a) {
    throw Error(ErrorCode::kMissingField, "field \"A\" is required");
  }
  const Matrix& a = *problem.a;
  const Eigen::Index n = a.rows();
  Matrix c;
  if (problem.c) {
    c = *problem.c;
  } else if (problem.q_mat) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(*problem.q_mat);
    c = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
        es.eigenvectors().transpose();
  } else {
    c = Matrix::Identity(n, n);
  }
  const StabilityReport stab = spectral_abscissa(a);
  double datko_total = 0.0;
  bool datko_finite = true;
  for (Eigen::Index i = 0; i < n; ++i) {
    const DatkoIntegral d = datko_integral(a, Vector::Unit(n, i));
    datko_total += d.value + (std::isfinite(d.tail_bound) ? d.tail_bound : 0.0);
    datko_finite = datko_finite && std::isfinite(d.tail_bound);
  }
  const WonhamReport w = wonham_equivalence(a, c, {}, seed);
  const double horizon =
      stab.abscissa != 0.0 ? std::min(50.0, 20.0 / std::abs(stab.abscissa))
                           : 50.0;
  const DetectorSampleReport det = l2_detector_sample(c, a, 32, seed, horizon);
  auto b = [](bool v) { return v ? "true" : "false"; };
  std::string text = "{\n";
  text += fmt::format("  \"name\": \"{}\",\n", problem.name);
  text += fmt::format("  \"abscissa\": {:.17g},\n  \"isStable\": {},\n"
                      "  \"margin\": {:.17g},\n",
                      stab.abscissa, b(stab.is_stable), stab.margin);
  text += fmt::format("  \"datko\": {{\"finite\": {}, \"basisTotal\": {}}},\n",
                      b(datko_finite),
                      datko_finite ? fmt::format("{:.17g}", datko_total)
                                   : std::string("null"));
  text += fmt::format(
      "  \"equivalence\": {{\"hypothesisMet\": {}, \"condIDecidable\": {}, "
      "\"condI\": {}, \"condII\": {}, \"condIII\": {}, \"consistent\": {}, "
      "\"samples\": {}}},\n",
      b(w.hypothesis_met), b(w.cond_i_decidable), b(w.cond_i), b(w.cond_ii),
      b(w.cond_iii), b(w.consistent), w.samples);
  text += fmt::format("  \"l2Detector\": {{\"consistent\": {}, \"violating\": "
                      "{}, \"inconclusive\": {}}}\n}}\n",
                      det.consistent, det.violating, det.inconclusive);
  return text;
}

std::vector<Eigen::Index> parse_indices(const std::string& s) {
  std::vector<Eigen::Index> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(static_cast<Eigen::Index>(v));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParseError,
                  fmt::format("\"{}\" is not an index", item));
    }
  }
  return out;
}

std::vector<int> parse_suites(const std::string& s) {
  if (s == "all") return {};
  std::vector<int> out;
  for (const Eigen::Index v : parse_indices(s)) {
    suite_name(static_cast<int>(v));  // validates
    out.push_back(static_cast<int>(v));
  }
  return out;
}

}  // namespace

ResultFile run_problem(const ProblemFile& problem, const SolverConfig& cfg) {
  switch (problem.mode) {
    case ProblemMode::kRiccati: return run_riccati(problem, cfg);
    case ProblemMode::kLyapunov: return run_lyapunov(problem, cfg);
    case ProblemMode::kSqrt: return run_sqrt(problem, cfg);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown problem mode");
}

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Newton-Kleinman Riccati and Lyapunov solver"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  CommonOptions opts;
  app.add_option("--tol", opts.cfg.rel_tol, "Residual tolerance (relative)");
  app.add_option("--step-tol", opts.cfg.step_tol, "Step-size tolerance");
  app.add_option("--mon-tol", opts.cfg.mon_tol, "Monotonicity slack");
  app.add_option("--max-iter", opts.cfg.max_iter, "Newton iteration cap");
  app.add_option("--method", opts.method, "Lyapunov solver")
      ->check(CLI::IsMember({"schur", "kron"}));
  app.add_flag("--oracle", opts.cfg.oracle,
               "Compare iterates with the Hamiltonian oracle");
  app.add_option("--seed", opts.cfg.seed, "RNG seed");
  app.add_option("--out", opts.out_path, "Write the result here");
  app.add_option("--trace", opts.trace_path, "Write the iteration trace CSV");

  std::string file;
  auto* solve = app.add_subcommand("solve", "Solve the Riccati equation");
  solve->add_option("file", file, "Problem JSON")->required();
  auto* lyap = app.add_subcommand("lyapunov", "Solve A^T P + P A = -Q");
  lyap->add_option("file", file, "Problem JSON")->required();
  auto* sqrt_cmd =
      app.add_subcommand("sqrt", "Solve P N P + 2 a P = Q");
  sqrt_cmd->add_option("file", file, "Problem JSON")->required();
  auto* stab = app.add_subcommand(
      "stability-check", "Abscissa, Datko integrals, stability equivalence");
  stab->add_option("file", file, "Problem JSON")->required();

  auto* demo = app.add_subcommand("demo", "Built-in demonstrations");
  demo->require_subcommand(1);
  auto* heat = demo->add_subcommand("heat", "Destabilized heat equation");
  Eigen::Index heat_n = 32;
  double heat_c = 0.0, heat_nu = 1.0, heat_target = 0.0;
  std::string actuators = "0", sensors;
  heat->add_option("--n", heat_n, "Grid points")->capture_default_str();
  auto* c_opt = heat->add_option("--c", heat_c, "Reaction coefficient");
  heat->add_option("--nu", heat_nu, "Diffusivity")->capture_default_str();
  heat->add_option("--abscissa", heat_target,
                   "Choose c so the open-loop abscissa equals this")
      ->excludes(c_opt);
  heat->add_option("--actuators", actuators,
                   "Comma-separated 0-based actuator indices");
  heat->add_option("--sensors", sensors,
                   "Comma-separated 0-based sensor indices (default: last)");

  auto* certify = app.add_subcommand("certify", "Run certification suites");
  std::string suites = "all";
  std::string fault;
  certify->add_option("--suite", suites, "all, or comma-separated suite ids");
  certify->add_option("--inject-fault", fault)
      ->check(CLI::IsMember({"flip-quadratic"}))
      ->group("");

  auto* bench = app.add_subcommand("bench", "Run the bundled corpus");
  std::string export_dir;
  bench->add_option("--export", export_dir,
                    "Write the corpus problem files to this directory");

  for (auto* sub : {solve, lyap, sqrt_cmd, stab, demo, heat, certify, bench}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << version() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    fmt::print(err, "{}\n", e.what());
    return kExitInputError;
  }

  try {
    const SolverConfig cfg = finalize(opts);
    if (solve->parsed() || lyap->parsed() || sqrt_cmd->parsed()) {
      ProblemFile problem = load_problem(file);
      ResultFile r = solve->parsed()  ? run_riccati(problem, cfg)
                     : lyap->parsed() ? run_lyapunov(problem, cfg)
                                      : run_sqrt(problem, cfg);
      write_outputs(r, opts, out, err);
      return kExitOk;
    }
    if (stab->parsed()) {
      emit(stability_report(load_problem(file), cfg.seed), opts.out_path, out);
      return kExitOk;
    }
    if (heat->parsed()) {
      if (heat_n < 3) {
        throw Error(ErrorCode::kInvalidArgument, "--n must be >= 3");
      }
      if (heat->count("--abscissa") > 0) {
        heat_c = heat_shift_for_abscissa(heat_n, heat_nu, heat_target);
      }
      const std::vector<Eigen::Index> sens =
          sensors.empty() ? std::vector<Eigen::Index>{heat_n - 1}
                          : parse_indices(sensors);
      const StateSpaceSystem sys =
          heat_demo(heat_n, heat_c, heat_nu, parse_indices(actuators), sens);
      ProblemFile problem;
      problem.name = fmt::format("heat-{}", heat_n);
      problem.n = sys.n();
      problem.m = sys.m();
      problem.p = sys.p();
      problem.a = sys.a();
      problem.b = sys.b();
      problem.c = sys.c();
      fmt::print(err, "heat demo: n={} nu={} c={:.6g}, open-loop abscissa "
                      "{:.6g}\n",
                 heat_n, heat_nu, heat_c, spectral_abscissa(sys.a()).abscissa);
      const ResultFile r = run_riccati(problem, cfg);
      write_outputs(r, opts, out, err);
      fmt::print(err, "closed-loop abscissa {:.6g}\n", *r.closed_loop_abscissa);
      return kExitOk;
    }
    if (certify->parsed()) {
      CertifyOptions copts;
      copts.seed = app.count("--seed") > 0 ? cfg.seed : copts.seed;
      copts.suites = parse_suites(suites);
      if (fault == "flip-quadratic") {
        copts.fault = FaultInjection::kFlipQuadraticTerm;
      }
      const CertifyReport report = run_certification(copts);
      for (const SuiteResult& s : report.suites) {
        fmt::print(out, "[{}] {:>2} {:<26} {:8.3f} s  {}\n",
                   s.passed ? "PASS" : "FAIL", s.id, s.name, s.seconds,
                   s.detail);
      }
      const bool ok = report.all_passed();
      fmt::print(out, "certification {}\n", ok ? "passed" : "FAILED");
      return ok ? kExitOk : kExitCertificationFailure;
    }
    if (bench->parsed()) {
      const auto corpus = bundled_corpus();
      if (!export_dir.empty()) {
        std::filesystem::create_directories(export_dir);
        for (const ProblemFile& p : corpus) {
          save_problem(p, std::filesystem::path(export_dir) / (p.name + ".json"));
        }
      }
      bool all_match = true;
      fmt::print(out, "{:<24} {:<9} {:>4} {:>5} {:>8} {:>5} {:>11} {:>9}\n",
                 "problem", "mode", "n", "exit", "expected", "iter",
                 "rel.resid", "seconds");
      for (const ProblemFile& p : corpus) {
        const auto start = std::chrono::steady_clock::now();
        int code = kExitOk;
        ResultFile r;
        try {
          r = run_problem(p, cfg);
        } catch (const Error& e) {
          code = exit_code_for(e);
          fmt::print(err, "{}: {}\n", p.name, e.what());
        }
        const double secs = std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - start)
                                .count();
        const int expected = p.expected_exit.value_or(kExitOk);
        all_match = all_match && code == expected;
        fmt::print(out, "{:<24} {:<9} {:>4} {:>5} {:>8} {:>5} {:>11} {:>9.4f}\n",
                   p.name, to_string(p.mode), p.n, code, expected,
                   code == kExitOk ? fmt::format("{}", r.iterations) : "-",
                   code == kExitOk ? fmt::format("{:.2e}", r.relative_residual)
                                   : "-",
                   secs);
      }
      return all_match ? kExitOk : kExitCertificationFailure;
    }
  } catch (const Error& e) {
    fmt::print(err, "{}\n", e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    fmt::print(err, "{}\n", e.what());
    return kExitSolverError;
  }
  return kExitInputError;
}

}  // namespace kleinman
