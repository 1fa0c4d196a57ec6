#include "middlegan/density.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <string>

#include "middlegan/error.hpp"

namespace mgan::oracle {

namespace {

void smooth_and_normalise(std::vector<double>& mass) {
  double total = 0.0;
  for (double& m : mass) {
    m += kDensitySmoothing;
    total += m;
  }
  for (double& m : mass) m /= total;
}

double normal_cdf(double x, double mean, double sd) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
}

}  // namespace

std::size_t GridSpec::cell_count() const noexcept {
  if (axes.empty()) return 0;
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.bins;
  return n;
}

void GridSpec::validate() const {
  if (axes.empty()) throw InvalidArgument("grid: no axes");
  for (const auto& a : axes) {
    if (!std::isfinite(a.lo) || !std::isfinite(a.hi) || !(a.hi > a.lo)) {
      throw InvalidArgument("grid: bounds must be finite with hi > lo");
    }
    if (a.bins == 0) throw InvalidArgument("grid: bins must be >= 1");
  }
}

std::optional<std::size_t> GridSpec::cell_of(std::span<const double> point) const {
  if (point.size() != axes.size()) {
    throw ShapeError("grid: point has " + std::to_string(point.size()) + " coordinates, grid has " +
                     std::to_string(axes.size()) + " axes");
  }
  std::size_t cell = 0;
  for (std::size_t d = 0; d < axes.size(); ++d) {
    const auto& a = axes[d];
    const double x = point[d];
    if (!(x >= a.lo && x <= a.hi)) return std::nullopt;
    auto b = static_cast<std::size_t>((x - a.lo) / a.width());
    if (b >= a.bins) b = a.bins - 1;
    cell = cell * a.bins + b;
  }
  return cell;
}

std::vector<double> GridSpec::cell_center(std::size_t cell) const {
  std::vector<double> c(axes.size());
  for (std::size_t d = axes.size(); d-- > 0;) {
    const auto& a = axes[d];
    const std::size_t b = cell % a.bins;
    cell /= a.bins;
    c[d] = a.lo + (static_cast<double>(b) + 0.5) * a.width();
  }
  return c;
}

GridSpec GridSpec::default_1d() { return GridSpec{{GridAxis{-6.0, 6.0, 241}}}; }

GridSpec GridSpec::default_2d() {
  return GridSpec{{GridAxis{-6.0, 6.0, 61}, GridAxis{-6.0, 6.0, 61}}};
}

DensityGrid DensityGrid::from_weights(GridSpec grid, std::vector<double> weights) {
  grid.validate();
  if (weights.size() != grid.cell_count()) {
    throw ShapeError("density: " + std::to_string(weights.size()) + " weights for " +
                     std::to_string(grid.cell_count()) + " cells");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("density: weights must be >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw InvalidArgument("density: weights sum to zero");
  for (double& w : weights) w /= total;
  return DensityGrid{std::move(grid), std::move(weights)};
}

DensityGrid DensityGrid::uniform(GridSpec grid) {
  grid.validate();
  const std::size_t n = grid.cell_count();
  return DensityGrid{std::move(grid), std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

void DensityGrid::validate() const {
  grid.validate();
  if (mass.size() != grid.cell_count()) throw ShapeError("density: mass/cell count mismatch");
  double total = 0.0;
  for (double m : mass) {
    if (!(m >= 0.0) || !std::isfinite(m)) throw InvalidArgument("density: negative or non-finite mass");
    total += m;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidArgument("density: masses sum to " + std::to_string(total));
  }
}

DensityGrid estimate_density(const nn::Tensor2& points, const GridSpec& grid) {
  grid.validate();
  if (points.rows() == 0) throw InvalidArgument("estimate_density: no samples");
  if (points.cols() != grid.dimension()) {
    throw ShapeError("estimate_density: " + std::to_string(points.cols()) + "-D samples on a " +
                     std::to_string(grid.dimension()) + "-D grid");
  }
  std::vector<double> counts(grid.cell_count(), 0.0);
  std::size_t inside = 0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    if (auto c = grid.cell_of(points.row(i))) {
      counts[*c] += 1.0;
      ++inside;
    }
  }
  if (inside == 0) throw InvalidArgument("estimate_density: all samples fall outside the grid");
  for (double& c : counts) c /= static_cast<double>(inside);
  smooth_and_normalise(counts);
  return DensityGrid{grid, std::move(counts)};
}

DensityGrid estimate_density(const domains::LabeledDataset& samples, const GridSpec& grid) {
  return estimate_density(samples.points, grid);
}

DensityGrid discretize_gaussian(const GridSpec& grid, std::span<const double> mean,
                                std::span<const double> stddev) {
  grid.validate();
  if (mean.size() != grid.dimension() || stddev.size() != grid.dimension()) {
    throw ShapeError("discretize_gaussian: parameters do not match grid dimension");
  }
  std::vector<std::vector<double>> per_axis(grid.dimension());
  for (std::size_t d = 0; d < grid.dimension(); ++d) {
    if (!(stddev[d] > 0.0)) throw InvalidArgument("discretize_gaussian: stddev must be > 0");
    const auto& a = grid.axes[d];
    double total = 0.0;
    for (std::size_t b = 0; b < a.bins; ++b) {
      const double lo = a.lo + static_cast<double>(b) * a.width();
      const double hi = a.lo + static_cast<double>(b + 1) * a.width();
      const double m = normal_cdf(hi, mean[d], stddev[d]) - normal_cdf(lo, mean[d], stddev[d]);
      per_axis[d].push_back(m);
      total += m;
    }
    for (double& m : per_axis[d]) m /= total;
  }
  std::vector<double> mass(grid.cell_count());
  for (std::size_t cell = 0; cell < mass.size(); ++cell) {
    std::size_t rest = cell;
    double m = 1.0;
    for (std::size_t d = grid.dimension(); d-- > 0;) {
      m *= per_axis[d][rest % grid.axes[d].bins];
      rest /= grid.axes[d].bins;
    }
    mass[cell] = m;
  }
  smooth_and_normalise(mass);
  return DensityGrid{grid, std::move(mass)};
}

DensityGrid mixture(std::span<const DensityGrid> parts, std::span<const double> weights) {
  if (parts.empty() || parts.size() != weights.size()) {
    throw InvalidArgument("mixture: need one weight per component");
  }
  std::vector<double> mass(parts.front().size(), 0.0);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    require_same_grid(parts.front(), parts[k], "mixture");
    for (std::size_t i = 0; i < mass.size(); ++i) mass[i] += weights[k] * parts[k].mass[i];
  }
  return DensityGrid::from_weights(parts.front().grid, std::move(mass));
}

double total_variation(const DensityGrid& p, const DensityGrid& q) {
  require_same_grid(p, q, "total_variation");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p.mass[i] - q.mass[i]);
  return 0.5 * s;
}

void require_same_grid(const DensityGrid& p, const DensityGrid& q, const char* op) {
  if (!(p.grid == q.grid) || p.mass.size() != q.mass.size()) {
    throw ShapeError(std::string(op) + ": density grids differ");
  }
}

void write_grid_csv(const DensityGrid& grid, std::ostream& out) {
  out << "cell_index,mass\n";
  char buf[40];
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", grid.mass[i]);
    out << i << ',' << buf << '\n';
  }
}

}  // namespace mgan::oracle
