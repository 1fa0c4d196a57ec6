#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "middlegan/domains.hpp"
#include "middlegan/gan.hpp"
#include "middlegan/oracles.hpp"
#include "middlegan/pipeline.hpp"

namespace mgan::runner {

enum class ExperimentKind {
  gan_train,
  oracle_centroid,
  verify_identity,
  adaptation,
  agnosticism,
  gradcheck,
};

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

struct GradcheckSettings {
  std::size_t architectures = 20;
  double fd_step = 1e-5;
  double max_error = 1e-4;
  std::size_t batch = 4;
};

struct IdentitySettings {
  std::size_t triples = 100;
  double tolerance = 1e-9;
};

struct GridSettings {
  double lo = -6.0;
  double hi = 6.0;
  std::size_t bins = 0;  // 0 until resolved: 241 in 1-D, 61 per axis otherwise

  oracle::GridSpec spec(std::size_t dimension) const;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::gradcheck;
  std::vector<std::uint64_t> seeds;
  std::string output_dir = "out";

  std::size_t n_per_class = 500;
  std::size_t n_test_per_class = 500;
  std::optional<std::size_t> n_fake_per_class;
  std::size_t density_samples = 200000;

  std::optional<domains::DomainSpec> source;
  /// Full target spec. When target_from_source is set it equals the source
  /// base spec with target_transform applied.
  std::optional<domains::DomainSpec> target;
  bool target_from_source = true;
  domains::Transform target_transform;

  gan::GanTrainConfig gan;
  pipeline::ClassifierConfig classifier;
  pipeline::PseudoLabelConfig pseudo_label;
  GridSettings grid;
  oracle::CentroidSolverConfig centroid;
  std::size_t probes = 100;
  double probe_tolerance = 1e-9;
  GradcheckSettings gradcheck;
  IdentitySettings identity;
};

struct ParseOptions {
  bool strict = true;  // reject unknown sections and keys
  std::optional<ExperimentKind> kind;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<std::string> output_dir;
};

/// Parses the sectioned `key = value` format. Throws ConfigError carrying the
/// offending line for syntax errors, duplicate sections or keys, unknown keys
/// (strict mode), type mismatches, missing required keys and violated
/// constraints.
ExperimentConfig parse_config(std::string_view text, const ParseOptions& options = {});

/// Canonical text: fixed section and key order, every knob spelled out,
/// reals at 17 significant digits. parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& cfg);

/// FNV-1a 64 of the canonical text without `seeds` and `output_dir`, as hex.
std::string config_digest(const ExperimentConfig& cfg);

/// Ready-to-run configuration text for each kind.
std::string builtin_config(ExperimentKind kind);

}  // namespace mgan::runner
