#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "middlegan/rng.hpp"
#include "middlegan/tensor.hpp"

namespace mgan::domains {

enum class DomainTag { source, target, generated };

std::string to_string(DomainTag tag);
DomainTag domain_tag_from_string(const std::string& name);

/// Points in R^d with a class label per row.
struct LabeledDataset {
  nn::Tensor2 points;
  std::vector<std::size_t> labels;
  DomainTag tag = DomainTag::source;
  std::size_t class_count = 0;

  std::size_t size() const noexcept { return points.rows(); }
  std::size_t dim() const noexcept { return points.cols(); }

  /// Throws InvalidArgument on empty data, label/row count mismatch,
  /// out-of-range labels or non-finite points.
  void validate() const;

  /// Rows whose label is `label`, keeping class_count and tag.
  LabeledDataset class_subset(std::size_t label) const;
  std::vector<std::size_t> class_counts() const;
  /// Mean of the points carrying `label`; empty when the class is absent.
  std::vector<double> class_centroid(std::size_t label) const;

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

/// Row-wise concatenation. All parts must share dimension and class_count.
LabeledDataset concat(std::span<const LabeledDataset> parts, DomainTag tag);

enum class Family { gaussian_mixture, two_moons, ring };

std::string to_string(Family family);
Family family_from_string(const std::string& name);

struct Transform {
  double rotation_degrees = 0.0;
  std::vector<double> shift;  // empty means no shift

  friend bool operator==(const Transform&, const Transform&) = default;
};

/// Per-class parameters. gaussian_mixture uses mean + covariance (d×d,
/// row-major); ring uses radius; two_moons uses none.
struct ClassParams {
  std::vector<double> mean;
  std::vector<double> covariance;
  double radius = 0.0;

  friend bool operator==(const ClassParams&, const ClassParams&) = default;
};

struct DomainSpec {
  Family family = Family::gaussian_mixture;
  std::size_t class_count = 2;
  std::size_t dimension = 2;
  std::vector<ClassParams> classes;
  double noise = 0.1;  // two_moons / ring: isotropic Gaussian jitter
  double scale = 1.0;  // two_moons: geometric scale
  std::optional<Transform> transform;

  void validate() const;

  friend bool operator==(const DomainSpec&, const DomainSpec&) = default;
};

struct NoiseSpec {
  std::size_t dimension = 2;
};

/// n × dimension standard normal draws.
nn::Tensor2 sample_noise(const NoiseSpec& spec, std::size_t n, Rng& rng);

/// Isotropic Gaussian classes with the given flat means (class_count × dimension).
DomainSpec gaussian_classes(std::size_t dimension, std::span<const double> flat_means,
                            std::span<const double> stddevs);
/// Two interleaved half circles centred on the origin.
DomainSpec two_moons(double scale = 2.0, double noise = 0.1);
/// Copy of `base` with a rotation (and optional shift) applied after sampling.
DomainSpec with_transform(DomainSpec base, double rotation_degrees, std::vector<double> shift = {});

/// Balanced draw of `n_per_class` points per class, tagged source.
/// Deterministic in `seed`; class k draws from its own derived stream.
LabeledDataset sample_domain(const DomainSpec& spec, std::size_t n_per_class, std::uint64_t seed);

/// Rotates about the origin (in the x0/x1 plane) then shifts. One-dimensional
/// data accepts only multiples of 180 degrees. Labels and tag are preserved.
LabeledDataset transform_dataset(const LabeledDataset& data, double rotation_degrees,
                                 std::span<const double> shift = {});

/// CSV with header `x0,x1,...,label,domain`, values at 9 significant digits.
void write_csv(const LabeledDataset& data, std::ostream& out);
std::string to_csv(const LabeledDataset& data);
/// Parses the CSV written by write_csv. class_count is max label + 1 unless
/// a larger value is given. The tag is taken from the first row.
LabeledDataset read_csv(std::istream& in, std::size_t class_count = 0);

}  // namespace mgan::domains
