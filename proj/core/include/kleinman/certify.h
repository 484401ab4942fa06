#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kleinman/config.h"
#include "kleinman/riccati.h"

namespace kleinman {

/// Self-certification suites. Suites 1-11 check the solver's guarantees at
/// the documented tolerances; suite 12 reruns 1-11 with a flipped quadratic
/// term in the Newton right-hand side and passes when some suite catches it.
inline constexpr int kNumSuites = 12;

struct CertifyOptions {
  /// Suite ids to run; empty means 1-11.
  std::vector<int> suites;
  std::uint64_t seed = 20240611;
  FaultInjection fault = FaultInjection::kNone;
};

struct SuiteResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct CertifyReport {
  std::vector<SuiteResult> suites;
  bool all_passed() const;
};

std::string_view suite_name(int id);

SuiteResult run_suite(int id, const CertifyOptions& options);
CertifyReport run_certification(const CertifyOptions& options);

/// Deterministic batch of Hautus-admissible systems with n spread over
/// [n_min, n_max], open-loop abscissas cycling through -1, 0.5, 2 and
/// max(1, n/2) inputs and outputs.
std::vector<StateSpaceSystem> admissible_systems(int count, Eigen::Index n_min,
                                                 Eigen::Index n_max,
                                                 std::uint64_t seed);

}  // namespace kleinman
