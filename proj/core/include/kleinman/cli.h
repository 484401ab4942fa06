#pragma once

#include <iosfwd>

#include "kleinman/problems_io.h"

namespace kleinman {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitSolverError = 1,
  kExitInputError = 2,
  kExitCertificationFailure = 3,
};

int exit_code_for(const Error& error);

/// Runs the problem according to its mode: the Riccati pipeline, a Lyapunov
/// solve with Q (or C^T C), or the regularized square root.
ResultFile run_problem(const ProblemFile& problem, const SolverConfig& cfg);

/// Entry point of the `kleinman` tool. Results go to `out`, diagnostics to
/// `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace kleinman
