#ifndef MJP_ACCEPTANCE_HPP
#define MJP_ACCEPTANCE_HPP

#include "mjp/manifest.hpp"

#include <json.hpp>

#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace mjp {

using Params = std::map<std::string, std::string>;

struct CriterionOutcome {
  int id = 0;
  std::string title;
  bool passed = false;
  bool monte_carlo = false;
  std::string summary;
  nlohmann::json report;
  nlohmann::json fingerprint;  // numbers at %.17g, compared on replay
  double seconds = 0.0;
};

inline constexpr int kCriteria = 11;

std::string criterion_title(int id);

/// Pinned parameters of criterion `id` for a given base seed.
Params criterion_params(int id, std::uint64_t seed);

/// Runs criteria 1-10 from explicit parameters.
CriterionOutcome run_criterion(int id, const Params& params);

struct AcceptanceRun {
  std::vector<CriterionOutcome> outcomes;
  bool all_passed() const;
};

/// Runs 1-10, writes one manifest per Monte Carlo criterion under `out_dir`,
/// then replays every manifest for criterion 11. Prints one line per
/// criterion to `log`.
AcceptanceRun run_acceptance(const std::string& out_dir, std::uint64_t seed,
                             std::ostream& log, const std::vector<int>& only = {});

/// Replays a criterion manifest and compares its fingerprint with `expected`.
bool replay_matches(const RunManifest& manifest, const nlohmann::json& expected,
                    nlohmann::json* replayed = nullptr);

}  // namespace mjp

#endif  // MJP_ACCEPTANCE_HPP
