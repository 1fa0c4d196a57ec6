#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "middlegan/config.hpp"
#include "middlegan/density.hpp"

namespace mgan::runner {

inline constexpr const char* kToolVersion = "0.1.0";

/// Shown in every adaptation report; a stronger pseudo-labeler such as Fixbi
/// would change the numbers.
inline constexpr const char* kPseudoLabelerNote =
    "pseudo-labels come from a thresholded source classifier or nearest class centroid, "
    "not Fixbi";

struct RunReport {
  std::string config_digest;
  ExperimentKind kind = ExperimentKind::gradcheck;
  std::vector<nlohmann::ordered_json> per_seed;  // one object per seed, in seed order
  /// {metric path: {median, min, max}} over the numeric leaves of per_seed.
  nlohmann::ordered_json aggregate = nlohmann::ordered_json::object();
  std::string tool_version = kToolVersion;
  bool passed = true;
  std::vector<std::string> failures;

  nlohmann::ordered_json to_json() const;
};

/// Runs every seed of `cfg` in order, writes artifacts under cfg.output_dir
/// (per-seed files in seed_<n>/, report.json at the top) and returns the
/// report. `passed` is false when a verification check failed. Errors from
/// the modules are rethrown with the experiment kind prepended.
RunReport run_experiment(const ExperimentConfig& cfg);

/// Result for a single seed, without touching the filesystem when
/// `artifact_dir` is empty.
nlohmann::ordered_json run_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                        const std::string& artifact_dir);

/// {median, min, max} for every numeric leaf in the objects, keyed by JSON
/// pointer. Booleans and the `seed` field are skipped.
nlohmann::ordered_json aggregate_numeric(const std::vector<nlohmann::ordered_json>& per_seed);

/// Mass function of a domain (optionally one class of it) on `grid`. Exact
/// cell integrals for axis-aligned Gaussian classes whose transform keeps
/// them axis-aligned; otherwise a histogram of `samples` draws.
struct DomainDensity {
  oracle::DensityGrid density;
  bool exact = false;
};
DomainDensity domain_density(const domains::DomainSpec& spec, std::optional<std::size_t> label,
                             const oracle::GridSpec& grid, std::size_t samples, std::uint64_t seed);

}  // namespace mgan::runner
