#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "middlegan/domains.hpp"
#include "middlegan/error.hpp"

using namespace mgan;
using namespace mgan::domains;

namespace {

DomainSpec two_gaussians() {
  const double means[] = {2, 0, -2, 0};
  const double sd[] = {1.0};
  return gaussian_classes(2, means, sd);
}

double max_pairwise_distance_change(const nn::Tensor2& a, const nn::Tensor2& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = i + 1; j < a.rows(); ++j) {
      double da = 0.0, db = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) {
        da += (a(i, k) - a(j, k)) * (a(i, k) - a(j, k));
        db += (b(i, k) - b(j, k)) * (b(i, k) - b(j, k));
      }
      worst = std::max(worst, std::abs(std::sqrt(da) - std::sqrt(db)));
    }
  }
  return worst;
}

}  // namespace

TEST_SUITE("domains") {

TEST_CASE("sample_domain: class means within 3 sigma / sqrt(n)") {
  const std::size_t n = 2000;
  const auto data = sample_domain(two_gaussians(), n, 7);
  CHECK(data.size() == 2 * n);
  CHECK(data.class_counts() == std::vector<std::size_t>{n, n});
  const double tol = 3.0 / std::sqrt(static_cast<double>(n));
  const auto c0 = data.class_centroid(0), c1 = data.class_centroid(1);
  CHECK(std::abs(c0[0] - 2.0) < tol);
  CHECK(std::abs(c0[1]) < tol);
  CHECK(std::abs(c1[0] + 2.0) < tol);
  CHECK(std::abs(c1[1]) < tol);
}

TEST_CASE("sample_domain: determinism and seed independence") {
  const auto spec = two_gaussians();
  CHECK(sample_domain(spec, 300, 11) == sample_domain(spec, 300, 11));
  const auto a = sample_domain(spec, 3000, 1), b = sample_domain(spec, 3000, 2);
  CHECK_FALSE(a == b);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto ca = a.class_centroid(k), cb = b.class_centroid(k);
    for (std::size_t j = 0; j < 2; ++j) CHECK(std::abs(ca[j] - cb[j]) < 0.15);
  }
}

TEST_CASE("sample_domain: 180 degree transform negates, 0 degrees is identity") {
  const auto spec = two_gaussians();
  const auto plain = sample_domain(spec, 100, 5);
  const auto turned = sample_domain(with_transform(spec, 180.0), 100, 5);
  for (std::size_t i = 0; i < plain.size(); ++i) {
    CHECK(turned.points(i, 0) == -plain.points(i, 0));
    CHECK(turned.points(i, 1) == -plain.points(i, 1));
  }
  CHECK(turned.labels == plain.labels);
  CHECK(sample_domain(with_transform(spec, 0.0), 100, 5) == plain);
}

TEST_CASE("spec validation") {
  auto spec = two_gaussians();
  spec.classes[0].covariance = {1, 2, 2, 1};  // indefinite
  CHECK_THROWS_AS(spec.validate(), InvalidArgument);
  CHECK_THROWS_AS(sample_domain(spec, 10, 1), InvalidArgument);
  CHECK_THROWS_AS(with_transform(two_gaussians(), 360.0).validate(), InvalidArgument);
  CHECK_THROWS_AS(with_transform(two_gaussians(), -10.0).validate(), InvalidArgument);
  CHECK_THROWS_AS(sample_domain(two_gaussians(), 0, 1), InvalidArgument);
}

TEST_CASE("transform_dataset: exact quarter turns and round trips") {
  LabeledDataset d{nn::Tensor2(1, 2, std::vector<double>{1, 0}), {0}, DomainTag::generated, 1};
  const auto q = transform_dataset(d, 90.0);
  CHECK(std::abs(q.points(0, 0)) < 1e-12);
  CHECK(std::abs(q.points(0, 1) - 1.0) < 1e-12);
  CHECK(q.tag == DomainTag::generated);

  const auto data = sample_domain(two_moons(), 200, 3);
  const auto full = transform_dataset(data, 360.0);
  const auto twice = transform_dataset(transform_dataset(data, 180.0), 180.0);
  for (std::size_t i = 0; i < data.points.data().size(); ++i) {
    CHECK(std::abs(full.points.data()[i] - data.points.data()[i]) < 1e-9);
    CHECK(std::abs(twice.points.data()[i] - data.points.data()[i]) < 1e-9);
  }
  const double shift[] = {1.0, -2.0};
  const auto shifted = transform_dataset(data, 0.0, shift);
  CHECK(shifted.points(0, 1) == doctest::Approx(data.points(0, 1) - 2.0));
  CHECK(shifted.labels == data.labels);
}

TEST_CASE("rotation preserves pairwise distances") {
  Rng rng = make_rng(99);
  std::uniform_real_distribution<double> angle(0.0, 360.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto data = sample_domain(two_gaussians(), 40, static_cast<std::uint64_t>(trial));
    const auto turned = transform_dataset(data, angle(rng));
    CHECK(max_pairwise_distance_change(data.points, turned.points) < 1e-9);
  }
}

TEST_CASE("one-dimensional data only flips") {
  const double mean[] = {-2.0};
  const double sd[] = {1.0};
  const auto data = sample_domain(gaussian_classes(1, mean, sd), 50, 1);
  const auto flipped = transform_dataset(data, 180.0);
  CHECK(flipped.points(3, 0) == -data.points(3, 0));
  CHECK_THROWS_AS((void)transform_dataset(data, 90.0), InvalidArgument);
}

TEST_CASE("two moons are centred and labelled") {
  const auto data = sample_domain(two_moons(2.0, 0.1), 1000, 4);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    mx += data.points(i, 0);
    my += data.points(i, 1);
  }
  CHECK(std::abs(mx / data.size()) < 0.1);
  CHECK(std::abs(my / data.size()) < 0.1);
  CHECK(data.class_counts() == std::vector<std::size_t>{1000, 1000});
}

TEST_CASE("csv round trip and header") {
  auto data = sample_domain(two_gaussians(), 5, 2);
  data.tag = DomainTag::target;
  const std::string text = to_csv(data);
  CHECK(text.rfind("x0,x1,label,domain\n", 0) == 0);
  CHECK(text.find(",target\n") != std::string::npos);
  std::istringstream in(text);
  const auto back = read_csv(in);
  CHECK(back.labels == data.labels);
  CHECK(back.tag == DomainTag::target);
  for (std::size_t i = 0; i < data.points.data().size(); ++i) {
    CHECK(back.points.data()[i] == doctest::Approx(data.points.data()[i]).epsilon(1e-8));
  }
}

TEST_CASE("dataset validation and concat") {
  LabeledDataset bad{nn::Tensor2(2, 1), {0, 3}, DomainTag::source, 2};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  const auto a = sample_domain(two_gaussians(), 3, 1), b = sample_domain(two_gaussians(), 4, 2);
  const LabeledDataset parts[] = {a, b};
  const auto joined = concat(parts, DomainTag::source);
  CHECK(joined.size() == 14);
  CHECK(joined.class_subset(1).size() == 7);
}

}  // TEST_SUITE
