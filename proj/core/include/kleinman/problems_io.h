#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kleinman/config.h"
#include "kleinman/riccati.h"

namespace kleinman {

enum class ProblemMode { kRiccati, kLyapunov, kSqrt };

std::string_view to_string(ProblemMode mode);

/// JSON problem description. Matrices are nested row arrays (a flat
/// row-major array of the declared length is also accepted).
///
///   riccati:  n, m, p, A (n x n), B (n x m), C (p x n), optional K0 (m x n)
///   lyapunov: n, A, and either Q (n x n) or p with C (p x n)
///   sqrt:     n, a > 0, N (n x n), Q (n x n)
struct ProblemFile {
  std::string name;
  ProblemMode mode = ProblemMode::kRiccati;
  Eigen::Index n = 0, m = 0, p = 0;
  std::optional<Matrix> a, b, c, k0;
  std::optional<double> reg_a;  ///< "a" in sqrt mode
  std::optional<Matrix> n_mat, q_mat;
  /// Documented exit code for corpus entries; not part of the problem.
  std::optional<int> expected_exit;

  /// The (A, B, C) triple; throws kMissingField if any is absent.
  StateSpaceSystem system() const;
};

/// Throws kParseError, kDimensionMismatch or kMissingField; messages name
/// the offending field.
ProblemFile parse_problem(std::string_view json_text);
ProblemFile load_problem(const std::filesystem::path& path);

std::string write_problem(const ProblemFile& problem);
void save_problem(const ProblemFile& problem,
                  const std::filesystem::path& path);

struct ResultFile {
  std::string name;
  std::string mode;
  Matrix p;
  std::optional<Matrix> k;
  double residual = 0.0;
  double relative_residual = 0.0;
  int iterations = 0;
  std::string stop_reason;  ///< empty when not applicable
  std::optional<double> kappa;
  std::optional<double> closed_loop_abscissa;
  IterationTrace trace;
  SolverConfig config;
  std::string version;
};

/// JSON with 17 significant digits per double; NaN and infinities become
/// null.
std::string write_result(const ResultFile& result);
/// Inverse of write_result for the fields needed to replay a run.
ResultFile parse_result(std::string_view json_text);

/// CSV with header step,residual,stepGap,abscissa,errorToOracle.
std::string write_trace_csv(const IterationTrace& trace);

/// A = nu / h^2 tridiag(1, -2, 1) + c I with h = 1/(n+1), B = unit columns
/// at the actuator indices, C = unit rows at the sensor indices (0-based).
StateSpaceSystem heat_demo(Eigen::Index n, double c, double nu,
                           const std::vector<Eigen::Index>& actuators,
                           const std::vector<Eigen::Index>& sensors);

/// The reaction coefficient c that puts the heat-demo open-loop abscissa at
/// `target`.
double heat_shift_for_abscissa(Eigen::Index n, double nu, double target);

/// Scalar, diagonal, heat (n = 8, 32, 64; stable and destabilized),
/// dichotomous, sqrt and negative cases with documented exit codes.
std::vector<ProblemFile> bundled_corpus();

/// The library version string.
std::string_view version();

}  // namespace kleinman
