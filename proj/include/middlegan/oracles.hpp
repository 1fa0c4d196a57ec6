#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "middlegan/density.hpp"

namespace mgan::oracle {

/// Σ p·log(p/q) over cells with p > 0; q is clamped below at 1e-12.
double kl(const DensityGrid& p, const DensityGrid& q);

/// ½KL(p‖m) + ½KL(q‖m) with m = (p+q)/2. Bit-symmetric in its arguments.
double jsd(const DensityGrid& p, const DensityGrid& q);

struct OptimalDiscriminator {
  std::vector<double> value;                // p / (p + pm) per cell
  std::vector<std::size_t> undefined_cells;  // p = pm = 0; value set to 0.5
};

/// Cellwise best response of a discriminator separating p from pm.
OptimalDiscriminator optimal_discriminator(const DensityGrid& p, const DensityGrid& pm);

/// −2·log 4 + 2·JSD(ps‖pm) + 2·JSD(pt‖pm).
double virtual_criterion(const DensityGrid& ps, const DensityGrid& pt, const DensityGrid& pm);

/// The three-player value integrated over the grid for given discriminator
/// values per cell:
///   Σ ps·log ds + Σ pm·log(1−ds) + Σ pt·log dt + Σ pm·log(1−dt),
/// where zero-mass terms contribute zero.
double grid_value_objective(const DensityGrid& ps, const DensityGrid& pt, const DensityGrid& pm,
                            const std::vector<double>& ds, const std::vector<double>& dt);

/// JSD(ps‖pm) + JSD(pt‖pm), the quantity the centroid minimises.
double centroid_objective(const DensityGrid& ps, const DensityGrid& pt, const DensityGrid& pm);

enum class CentroidMethod { mixture_sweep, simplex_descent };

std::string to_string(CentroidMethod method);
CentroidMethod centroid_method_from_string(const std::string& name);

struct CentroidSolverConfig {
  CentroidMethod method = CentroidMethod::simplex_descent;
  std::size_t sweep_resolution = 101;  // number of mixture weights, endpoints included
  std::size_t descent_steps = 500;
  double descent_rate = 0.1;
  double tolerance = 1e-12;  // stop once an accepted step improves less than this

  void validate() const;
};

struct CentroidResult {
  DensityGrid centroid;
  double objective = 0.0;        // JSD(ps‖pm*) + JSD(pt‖pm*)
  double sweep_alpha = 0.5;      // best α in pm = α·ps + (1−α)·pt
  double sweep_objective = 0.0;
  std::vector<double> trace;     // objective after the sweep, then per accepted descent step
};

/// Mixture sweep over α ∈ {0, 1/(R−1), ..., 1}; with simplex_descent, then
/// projected descent over the whole simplex from the best sweep point. Each
/// step moves along the mass-weighted tangent gradient, clips to a positive
/// floor and renormalises; steps that would raise the objective are retried
/// at half the rate, so the trace never increases.
CentroidResult jsd_centroid(const DensityGrid& ps, const DensityGrid& pt,
                            const CentroidSolverConfig& cfg = {});

struct Theorem2Report {
  CentroidResult centroid;
  double criterion_at_centroid = 0.0;  // virtual_criterion(ps, pt, pm*)
  std::size_t probes_checked = 0;
  /// max over probes of C(pm*) − C(probe); positive means a probe did better.
  double max_violation = 0.0;
  bool trace_monotone = true;
  bool passed = true;
  std::optional<std::string> failing_probe;
};

/// Certifies the centroid numerically: C(pm*) must not exceed C at any of
/// `random_probes` Dirichlet(1) points, at ps, pt, their even mixture or the
/// uniform grid by more than `tolerance`, and the descent trace must be
/// non-increasing.
Theorem2Report verify_theorem2(const DensityGrid& ps, const DensityGrid& pt,
                               const CentroidSolverConfig& cfg = {}, std::size_t random_probes = 100,
                               std::uint64_t seed = 0, double tolerance = 1e-9);

}  // namespace mgan::oracle
