#pragma once

#include <string>
#include <vector>

#include "drm/batch.hpp"
#include "drm/common.hpp"

namespace drm {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::uint64_t seed = 0;
  std::string scratch_dir = "acceptance_out";
  ExecMode exec = ExecMode::OpenMP;
};

/// Runs the numbered validation criteria (1..10). Criteria 1-5 are the fast
/// oracle checks (also exposed through the CLI as the oracle_validation
/// suite); 6, 8 and 10 cover the estimator rates, the saddle scenario and the
/// schedule calculator; 7 and 9 are the environment reproductions.
std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids,
                                            const AcceptanceOptions& opts);

std::vector<int> all_criteria();
std::vector<int> oracle_validation_criteria();  // {1, 2, 3, 4, 5}

}  // namespace drm
