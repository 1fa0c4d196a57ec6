#include "middlegan/domains.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "middlegan/error.hpp"

namespace mgan::domains {

namespace {

// Lower-triangular Cholesky factor; nullopt when not positive definite.
std::optional<std::vector<double>> cholesky(std::span<const double> a, std::size_t d) {
  std::vector<double> l(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i * d + j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i * d + k] * l[j * d + k];
      if (i == j) {
        if (!(s > 1e-12)) return std::nullopt;
        l[i * d + i] = std::sqrt(s);
      } else {
        l[i * d + j] = s / l[j * d + j];
      }
    }
  }
  return l;
}

// cos/sin with exact values at multiples of 90 degrees.
std::pair<double, double> cos_sin_degrees(double degrees) {
  double r = std::fmod(degrees, 360.0);
  if (r < 0.0) r += 360.0;
  if (r == 0.0) return {1.0, 0.0};
  if (r == 90.0) return {0.0, 1.0};
  if (r == 180.0) return {-1.0, 0.0};
  if (r == 270.0) return {0.0, -1.0};
  const double rad = r * std::numbers::pi / 180.0;
  return {std::cos(rad), std::sin(rad)};
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::string to_string(DomainTag tag) {
  switch (tag) {
    case DomainTag::source:
      return "source";
    case DomainTag::target:
      return "target";
    case DomainTag::generated:
      return "generated";
  }
  return "source";
}

DomainTag domain_tag_from_string(const std::string& name) {
  if (name == "source") return DomainTag::source;
  if (name == "target") return DomainTag::target;
  if (name == "generated") return DomainTag::generated;
  throw InvalidArgument("unknown domain tag '" + name + "'");
}

std::string to_string(Family family) {
  switch (family) {
    case Family::gaussian_mixture:
      return "gaussian_mixture";
    case Family::two_moons:
      return "two_moons";
    case Family::ring:
      return "ring";
  }
  return "gaussian_mixture";
}

Family family_from_string(const std::string& name) {
  if (name == "gaussian_mixture") return Family::gaussian_mixture;
  if (name == "two_moons") return Family::two_moons;
  if (name == "ring") return Family::ring;
  throw InvalidArgument("unknown domain family '" + name + "'");
}

void LabeledDataset::validate() const {
  if (points.rows() == 0) throw InvalidArgument("dataset is empty");
  if (labels.size() != points.rows()) {
    throw InvalidArgument("dataset has " + std::to_string(points.rows()) + " points but " +
                          std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= class_count) {
      throw InvalidArgument("label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                            " >= class_count " + std::to_string(class_count));
    }
  }
  if (!points.all_finite()) throw InvalidArgument("dataset has non-finite points");
}

LabeledDataset LabeledDataset::class_subset(std::size_t label) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) idx.push_back(i);
  }
  return {nn::gather_rows(points, idx), std::vector<std::size_t>(idx.size(), label), tag,
          class_count};
}

std::vector<std::size_t> LabeledDataset::class_counts() const {
  std::vector<std::size_t> counts(class_count, 0);
  for (auto l : labels) {
    if (l < class_count) ++counts[l];
  }
  return counts;
}

std::vector<double> LabeledDataset::class_centroid(std::size_t label) const {
  std::vector<double> c(dim(), 0.0);
  std::size_t n = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != label) continue;
    auto r = points.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) c[j] += r[j];
    ++n;
  }
  if (n == 0) return {};
  for (double& v : c) v /= static_cast<double>(n);
  return c;
}

LabeledDataset concat(std::span<const LabeledDataset> parts, DomainTag tag) {
  if (parts.empty()) throw InvalidArgument("concat: no datasets");
  std::vector<nn::Tensor2> pts;
  LabeledDataset out;
  out.tag = tag;
  out.class_count = parts.front().class_count;
  for (const auto& p : parts) {
    if (p.dim() != parts.front().dim() && p.size() > 0) {
      throw ShapeError("concat: dimension " + std::to_string(p.dim()) + " vs " +
                       std::to_string(parts.front().dim()));
    }
    if (p.class_count != out.class_count) throw InvalidArgument("concat: class_count mismatch");
    if (p.size() == 0) continue;
    pts.push_back(p.points);
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
  }
  out.points = nn::vstack(pts);
  return out;
}

void DomainSpec::validate() const {
  if (class_count == 0) throw InvalidArgument("domain: class_count must be >= 1");
  if (dimension == 0) throw InvalidArgument("domain: dimension must be >= 1");
  switch (family) {
    case Family::gaussian_mixture:
      if (classes.size() != class_count) {
        throw InvalidArgument("gaussian_mixture: expected " + std::to_string(class_count) +
                              " class parameter sets, got " + std::to_string(classes.size()));
      }
      for (std::size_t k = 0; k < classes.size(); ++k) {
        const auto& c = classes[k];
        if (c.mean.size() != dimension || c.covariance.size() != dimension * dimension) {
          throw InvalidArgument("gaussian_mixture: class " + std::to_string(k) +
                                " mean/covariance do not match dimension " +
                                std::to_string(dimension));
        }
        for (std::size_t i = 0; i < dimension; ++i) {
          for (std::size_t j = 0; j < dimension; ++j) {
            if (c.covariance[i * dimension + j] != c.covariance[j * dimension + i]) {
              throw InvalidArgument("gaussian_mixture: class " + std::to_string(k) +
                                    " covariance is not symmetric");
            }
          }
        }
        if (!cholesky(c.covariance, dimension)) {
          throw InvalidArgument("gaussian_mixture: class " + std::to_string(k) +
                                " covariance is degenerate (not positive definite)");
        }
      }
      break;
    case Family::two_moons:
      if (class_count != 2 || dimension != 2) {
        throw InvalidArgument("two_moons: requires class_count = 2 and dimension = 2");
      }
      if (!(scale > 0.0) || !(noise >= 0.0)) throw InvalidArgument("two_moons: bad scale/noise");
      break;
    case Family::ring:
      if (dimension != 2) throw InvalidArgument("ring: requires dimension = 2");
      if (classes.size() != class_count) throw InvalidArgument("ring: one radius per class");
      for (const auto& c : classes) {
        if (!(c.radius > 0.0)) throw InvalidArgument("ring: radii must be > 0");
      }
      if (!(noise >= 0.0)) throw InvalidArgument("ring: noise must be >= 0");
      break;
  }
  if (transform) {
    if (!(transform->rotation_degrees >= 0.0 && transform->rotation_degrees < 360.0)) {
      throw InvalidArgument("transform: rotation_degrees must be in [0, 360)");
    }
    if (!transform->shift.empty() && transform->shift.size() != dimension) {
      throw InvalidArgument("transform: shift length must equal dimension");
    }
    if (dimension == 1 && std::fmod(transform->rotation_degrees, 180.0) != 0.0) {
      throw InvalidArgument("transform: 1-D data supports only 0 or 180 degree rotation");
    }
  }
}

nn::Tensor2 sample_noise(const NoiseSpec& spec, std::size_t n, Rng& rng) {
  if (spec.dimension == 0) throw InvalidArgument("noise dimension must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  nn::Tensor2 z(n, spec.dimension);
  for (double& v : z.data()) v = normal(rng);
  return z;
}

DomainSpec gaussian_classes(std::size_t dimension, std::span<const double> flat_means,
                            std::span<const double> stddevs) {
  if (dimension == 0 || flat_means.size() % dimension != 0) {
    throw InvalidArgument("gaussian_classes: means do not divide into dimension " +
                          std::to_string(dimension));
  }
  const std::size_t k = flat_means.size() / dimension;
  if (stddevs.size() != k && stddevs.size() != 1) {
    throw InvalidArgument("gaussian_classes: need one stddev per class (or one shared)");
  }
  DomainSpec spec;
  spec.family = Family::gaussian_mixture;
  spec.class_count = k;
  spec.dimension = dimension;
  for (std::size_t c = 0; c < k; ++c) {
    ClassParams p;
    p.mean.assign(flat_means.begin() + static_cast<std::ptrdiff_t>(c * dimension),
                  flat_means.begin() + static_cast<std::ptrdiff_t>((c + 1) * dimension));
    const double s = stddevs.size() == 1 ? stddevs[0] : stddevs[c];
    p.covariance.assign(dimension * dimension, 0.0);
    for (std::size_t i = 0; i < dimension; ++i) p.covariance[i * dimension + i] = s * s;
    spec.classes.push_back(std::move(p));
  }
  return spec;
}

DomainSpec two_moons(double scale, double noise) {
  DomainSpec spec;
  spec.family = Family::two_moons;
  spec.class_count = 2;
  spec.dimension = 2;
  spec.scale = scale;
  spec.noise = noise;
  return spec;
}

DomainSpec with_transform(DomainSpec base, double rotation_degrees, std::vector<double> shift) {
  base.transform = Transform{rotation_degrees, std::move(shift)};
  return base;
}

LabeledDataset sample_domain(const DomainSpec& spec, std::size_t n_per_class, std::uint64_t seed) {
  spec.validate();
  if (n_per_class == 0) throw InvalidArgument("sample_domain: n_per_class must be >= 1");

  const std::size_t d = spec.dimension;
  LabeledDataset out;
  out.tag = DomainTag::source;
  out.class_count = spec.class_count;
  out.points = nn::Tensor2(n_per_class * spec.class_count, d);
  out.labels.resize(out.points.rows());

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t k = 0; k < spec.class_count; ++k) {
    Rng rng = make_rng(derive_seed(seed, k));
    std::vector<double> chol;
    if (spec.family == Family::gaussian_mixture) chol = *cholesky(spec.classes[k].covariance, d);
    for (std::size_t n = 0; n < n_per_class; ++n) {
      const std::size_t row = k * n_per_class + n;
      auto p = out.points.row(row);
      out.labels[row] = k;
      switch (spec.family) {
        case Family::gaussian_mixture: {
          std::vector<double> z(d);
          for (double& v : z) v = normal(rng);
          for (std::size_t i = 0; i < d; ++i) {
            double s = spec.classes[k].mean[i];
            for (std::size_t j = 0; j <= i; ++j) s += chol[i * d + j] * z[j];
            p[i] = s;
          }
          break;
        }
        case Family::two_moons: {
          const double theta = std::numbers::pi * unit(rng);
          // Upper moon centred at (0,0), lower at (1,-0.5); recentred on the origin.
          double x = k == 0 ? std::cos(theta) : 1.0 - std::cos(theta);
          double y = k == 0 ? std::sin(theta) : 0.5 - std::sin(theta);
          x -= 0.5;
          y -= 0.25;
          p[0] = spec.scale * x + spec.noise * normal(rng);
          p[1] = spec.scale * y + spec.noise * normal(rng);
          break;
        }
        case Family::ring: {
          const double theta = 2.0 * std::numbers::pi * unit(rng);
          const double r = spec.classes[k].radius + spec.noise * normal(rng);
          p[0] = r * std::cos(theta);
          p[1] = r * std::sin(theta);
          break;
        }
      }
    }
  }
  if (spec.transform) {
    out = transform_dataset(out, spec.transform->rotation_degrees, spec.transform->shift);
  }
  return out;
}

LabeledDataset transform_dataset(const LabeledDataset& data, double rotation_degrees,
                                 std::span<const double> shift) {
  if (data.size() == 0) throw InvalidArgument("transform_dataset: empty dataset");
  const std::size_t d = data.dim();
  if (!shift.empty() && shift.size() != d) {
    throw ShapeError("transform_dataset: shift has " + std::to_string(shift.size()) +
                     " components for " + std::to_string(d) + "-D data");
  }
  const auto [c, s] = cos_sin_degrees(rotation_degrees);
  if (d == 1 && s != 0.0) {
    throw InvalidArgument("transform_dataset: 1-D data supports only multiples of 180 degrees");
  }
  LabeledDataset out = data;
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto p = out.points.row(i);
    if (d == 1) {
      p[0] = c * p[0];
    } else {
      const double x = p[0];
      const double y = p[1];
      p[0] = c * x - s * y;
      p[1] = s * x + c * y;
    }
    for (std::size_t j = 0; j < shift.size(); ++j) p[j] += shift[j];
  }
  return out;
}

void write_csv(const LabeledDataset& data, std::ostream& out) {
  for (std::size_t j = 0; j < data.dim(); ++j) out << 'x' << j << ',';
  out << "label,domain\n";
  const std::string tag = to_string(data.tag);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.points.row(i)) out << format_value(v) << ',';
    out << data.labels[i] << ',' << tag << '\n';
  }
}

std::string to_csv(const LabeledDataset& data) {
  std::ostringstream os;
  write_csv(data, os);
  return os.str();
}

LabeledDataset read_csv(std::istream& in, std::size_t class_count) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("read_csv: missing header");
  std::size_t cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (cols < 3 || line.rfind("label,domain") == std::string::npos) {
    throw InvalidArgument("read_csv: header must be x0,...,label,domain");
  }
  const std::size_t d = cols - 2;
  std::vector<double> values;
  LabeledDataset out;
  std::size_t lineno = 1;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != cols) {
      throw InvalidArgument("read_csv: line " + std::to_string(lineno) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(cols));
    }
    try {
      for (std::size_t j = 0; j < d; ++j) values.push_back(std::stod(fields[j]));
      out.labels.push_back(static_cast<std::size_t>(std::stoull(fields[d])));
    } catch (const std::logic_error&) {
      throw InvalidArgument("read_csv: line " + std::to_string(lineno) + " is not numeric");
    }
    const DomainTag tag = domain_tag_from_string(fields[d + 1]);
    if (first) out.tag = tag;
    first = false;
  }
  const std::size_t n = out.labels.size();
  out.points = nn::Tensor2(n, d, std::move(values));
  std::size_t max_label = 0;
  for (auto l : out.labels) max_label = std::max(max_label, l);
  out.class_count = std::max(class_count, n ? max_label + 1 : 0);
  return out;
}

}  // namespace mgan::domains
