#include "middlegan/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "middlegan/error.hpp"
#include "middlegan/io.hpp"

namespace mgan::runner {

namespace {

const char* tag_colour(domains::DomainTag tag) {
  switch (tag) {
    case domains::DomainTag::source:
      return "#1f77b4";
    case domains::DomainTag::target:
      return "#d62728";
    case domains::DomainTag::generated:
      return "#2ca02c";
  }
  return "#000000";
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

// Glyph for class k centred at (x, y), radius r. Cycles through five shapes.
void glyph(std::string& out, std::size_t k, double x, double y, double r) {
  char buf[160];
  switch (k % 5) {
    case 0:
      std::snprintf(buf, sizeof buf, "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"%.1f\"/>", x, y, r);
      break;
    case 1:
      std::snprintf(buf, sizeof buf, "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\"/>",
                    x - r, y - r, 2 * r, 2 * r);
      break;
    case 2:
      std::snprintf(buf, sizeof buf, "<path d=\"M%.1f %.1fl%.1f %.1fh%.1fz\"/>", x, y - r, r,
                    2 * r, -2 * r);
      break;
    case 3:
      std::snprintf(buf, sizeof buf, "<path d=\"M%.1f %.1fl%.1f %.1fl%.1f %.1fl%.1f %.1fz\"/>", x,
                    y - r, r, r, -r, r, -r, -r);
      break;
    default:
      std::snprintf(buf, sizeof buf,
                    "<path d=\"M%.1f %.1fl%.1f %.1fm0 %.1fl%.1f %.1f\" stroke-width=\"1\"/>",
                    x - r, y - r, 2 * r, 2 * r, -2 * r, -2 * r, 2 * r);
      break;
  }
  out += buf;
}

}  // namespace

std::string render_scatter_svg(std::span<const domains::LabeledDataset> datasets,
                               const ScatterStyle& style) {
  for (const auto& d : datasets) {
    if (d.dim() != 2) {
      throw ShapeError("scatter plot needs 2-D data, got " + std::to_string(d.dim()) + "-D");
    }
  }

  std::array<double, 4> b{-1.0, 1.0, -1.0, 1.0};
  if (style.bounds) {
    b = *style.bounds;
  } else {
    double lo[2] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    double hi[2] = {-lo[0], -lo[1]};
    for (const auto& d : datasets) {
      for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
          lo[j] = std::min(lo[j], d.points(i, j));
          hi[j] = std::max(hi[j], d.points(i, j));
        }
      }
    }
    if (std::isfinite(lo[0])) {
      for (std::size_t j = 0; j < 2; ++j) {
        const double pad = std::max(0.05 * (hi[j] - lo[j]), 1e-3);
        b[2 * j] = lo[j] - pad;
        b[2 * j + 1] = hi[j] + pad;
      }
    }
  }
  if (!(b[1] > b[0] && b[3] > b[2])) throw InvalidArgument("scatter plot bounds are empty");

  const double w = style.width, h = style.height;
  const double left = 60, right = 130, top = 30, bottom = 40;
  const double pw = w - left - right, ph = h - top - bottom;
  auto sx = [&](double x) { return left + (x - b[0]) / (b[1] - b[0]) * pw; };
  auto sy = [&](double y) { return top + (b[3] - y) / (b[3] - b[2]) * ph; };

  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
                "viewBox=\"0 0 %g %g\" font-family=\"sans-serif\" font-size=\"11\">\n",
                w, h, w, h);
  out += buf;
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!style.title.empty()) {
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"18\" text-anchor=\"middle\">", left + pw / 2);
    out += buf + escape(style.title) + "</text>\n";
  }

  // Axes: frame, tick labels at the bounds and at zero when visible.
  std::snprintf(buf, sizeof buf,
                "<g id=\"axes\" stroke=\"black\" fill=\"none\"><rect x=\"%.1f\" y=\"%.1f\" "
                "width=\"%.1f\" height=\"%.1f\"/>",
                left, top, pw, ph);
  out += buf;
  if (b[0] < 0 && b[1] > 0) {
    std::snprintf(buf, sizeof buf, "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#bbb\"/>",
                  sx(0), top, sx(0), top + ph);
    out += buf;
  }
  if (b[2] < 0 && b[3] > 0) {
    std::snprintf(buf, sizeof buf, "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#bbb\"/>",
                  left, sy(0), left + pw, sy(0));
    out += buf;
  }
  out += "</g>\n<g id=\"ticks\" fill=\"black\">";
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"start\">%.3g</text>"
                "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.3g</text>",
                left, top + ph + 15, b[0], left + pw, top + ph + 15, b[1]);
  out += buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.3g</text>"
                "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.3g</text>",
                left - 5, top + ph, b[2], left - 5, top + 10, b[3]);
  out += buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">x0</text>"
                "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">x1</text>",
                left + pw / 2, top + ph + 30, left - 35, top + ph / 2);
  out += buf;
  out += "</g>\n";

  for (std::size_t di = 0; di < datasets.size(); ++di) {
    const auto& d = datasets[di];
    std::snprintf(buf, sizeof buf, "<g class=\"dataset\" fill=\"%s\" stroke=\"%s\" fill-opacity=\"0.6\">",
                  tag_colour(d.tag), tag_colour(d.tag));
    out += buf;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double x = d.points(i, 0), y = d.points(i, 1);
      if (x < b[0] || x > b[1] || y < b[2] || y > b[3]) continue;
      glyph(out, d.labels[i], sx(x), sy(y), style.marker_size);
    }
    out += "</g>\n";
  }

  out += "<g id=\"legend\">";
  for (std::size_t di = 0; di < datasets.size(); ++di) {
    const auto& d = datasets[di];
    const double y = top + 10 + 18.0 * static_cast<double>(di);
    std::snprintf(buf, sizeof buf,
                  "<g class=\"legend-entry\"><rect x=\"%.1f\" y=\"%.1f\" width=\"10\" height=\"10\" "
                  "fill=\"%s\"/><text x=\"%.1f\" y=\"%.1f\">",
                  left + pw + 12, y - 9, tag_colour(d.tag), left + pw + 27, y);
    out += buf;
    const std::string label = di < style.labels.size() ? style.labels[di] : domains::to_string(d.tag);
    out += escape(label) + "</text></g>";
  }
  out += "</g>\n</svg>\n";
  return out;
}

void emit_scatter_svg(std::span<const domains::LabeledDataset> datasets, const ScatterStyle& style,
                      const std::filesystem::path& path) {
  write_file_atomic(path, render_scatter_svg(datasets, style));
}

}  // namespace mgan::runner
