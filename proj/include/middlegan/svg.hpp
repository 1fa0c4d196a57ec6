#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "middlegan/domains.hpp"

namespace mgan::runner {

struct ScatterStyle {
  double width = 640.0;
  double height = 480.0;
  double marker_size = 2.5;
  std::string title;
  /// Legend text per dataset; falls back to the domain tag.
  std::vector<std::string> labels;
  /// Plot bounds {xmin, xmax, ymin, ymax}; derived from the data when absent.
  std::optional<std::array<double, 4>> bounds;
};

/// Scatter plot of 2-D datasets: fill colour by domain tag, glyph by class,
/// axes with tick labels at the bounds and one legend entry per dataset.
/// Throws ShapeError for datasets that are not 2-D.
std::string render_scatter_svg(std::span<const domains::LabeledDataset> datasets,
                               const ScatterStyle& style = {});

/// render_scatter_svg written atomically to `path`.
void emit_scatter_svg(std::span<const domains::LabeledDataset> datasets, const ScatterStyle& style,
                      const std::filesystem::path& path);

}  // namespace mgan::runner
