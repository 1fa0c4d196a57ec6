#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "middlegan/domains.hpp"
#include "middlegan/tensor.hpp"

namespace mgan::oracle {

/// Additive smoothing applied to every cell before renormalising.
inline constexpr double kDensitySmoothing = 1e-6;

struct GridAxis {
  double lo = -6.0;
  double hi = 6.0;
  std::size_t bins = 241;

  double width() const noexcept { return (hi - lo) / static_cast<double>(bins); }
  friend bool operator==(const GridAxis&, const GridAxis&) = default;
};

/// Rectangular grid; cells are indexed row-major with the last axis fastest.
struct GridSpec {
  std::vector<GridAxis> axes;

  std::size_t dimension() const noexcept { return axes.size(); }
  std::size_t cell_count() const noexcept;
  /// Cell holding `point`, or nullopt when it lies outside the bounds. The
  /// upper edge of each axis belongs to the last bin.
  std::optional<std::size_t> cell_of(std::span<const double> point) const;
  std::vector<double> cell_center(std::size_t cell) const;
  void validate() const;

  /// 241 bins on [-6, 6].
  static GridSpec default_1d();
  /// 61 × 61 bins on [-6, 6]².
  static GridSpec default_2d();

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Probability mass function over a GridSpec.
struct DensityGrid {
  GridSpec grid;
  std::vector<double> mass;

  /// Normalises nonnegative weights into a DensityGrid (no smoothing).
  static DensityGrid from_weights(GridSpec grid, std::vector<double> weights);
  static DensityGrid uniform(GridSpec grid);

  /// Throws unless masses are nonnegative, finite and sum to 1 within 1e-9.
  void validate() const;
  std::size_t size() const noexcept { return mass.size(); }
};

/// Histogram of the points inside the grid, smoothed by kDensitySmoothing per
/// cell and renormalised. Points outside the bounds are dropped; throws when
/// none remain.
DensityGrid estimate_density(const nn::Tensor2& points, const GridSpec& grid);
DensityGrid estimate_density(const domains::LabeledDataset& samples, const GridSpec& grid);

/// Exact cell masses of an axis-aligned Gaussian (product of per-axis
/// normal CDF differences), renormalised over the grid and smoothed like
/// estimate_density.
DensityGrid discretize_gaussian(const GridSpec& grid, std::span<const double> mean,
                                std::span<const double> stddev);

/// Σ w_i p_i / Σ w_i over grids sharing a GridSpec.
DensityGrid mixture(std::span<const DensityGrid> parts, std::span<const double> weights);

/// Half the L1 distance between two mass functions on the same grid.
double total_variation(const DensityGrid& p, const DensityGrid& q);

/// Throws ShapeError unless both grids are identical.
void require_same_grid(const DensityGrid& p, const DensityGrid& q, const char* op);

/// `cell_index,mass` CSV.
void write_grid_csv(const DensityGrid& grid, std::ostream& out);

}  // namespace mgan::oracle
