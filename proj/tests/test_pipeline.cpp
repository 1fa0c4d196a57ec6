#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "middlegan/error.hpp"
#include "middlegan/pipeline.hpp"

using namespace mgan;
using namespace mgan::pipeline;

namespace {

domains::DomainSpec two_gaussians(double separation = 2.0, double sd = 0.75) {
  const double means[] = {separation, 0, -separation, 0};
  const double s[] = {sd};
  return domains::gaussian_classes(2, means, s);
}

domains::LabeledDataset targetify(domains::LabeledDataset d) {
  d.tag = domains::DomainTag::target;
  return d;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("nearest centroid labels a copy of the source exactly") {
  const auto src = domains::sample_domain(two_gaussians(4.0, 0.5), 200, 1);
  PseudoLabelConfig cfg;
  cfg.method = PseudoLabelMethod::nearest_class_centroid;
  const auto r = pseudo_label(src, src.points, cfg, 1);
  CHECK(r.coverage == 1.0);
  CHECK(r.labeled.labels == src.labels);
  CHECK(r.labeled.tag == domains::DomainTag::target);
}

TEST_CASE("threshold zero keeps every point; coverage falls with the threshold") {
  const auto src = domains::sample_domain(two_gaussians(), 300, 2);
  const auto tgt = domains::sample_domain(domains::with_transform(two_gaussians(), 60.0), 300, 3);
  PseudoLabelConfig cfg;
  cfg.confidence_threshold = 0.0;
  CHECK(pseudo_label(src, tgt.points, cfg, 4).coverage == 1.0);
  double previous = 1.0;
  for (double t : {0.5, 0.7, 0.8, 0.9, 0.95, 0.99}) {
    cfg.confidence_threshold = t;
    const double c = pseudo_label(src, tgt.points, cfg, 4).coverage;
    CAPTURE(t);
    CHECK(c <= previous);
    previous = c;
  }
}

TEST_CASE("pseudo labels on a 30 degree rotation are accurate") {
  const auto spec = two_gaussians();
  const auto src = domains::sample_domain(spec, 500, 5);
  const auto tgt = domains::sample_domain(domains::with_transform(spec, 30.0), 500, 6);
  const auto r = pseudo_label(src, tgt.points, {}, 7);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < r.kept.size(); ++i) agree += r.labeled.labels[i] == tgt.labels[r.kept[i]];
  CHECK(static_cast<double>(agree) / static_cast<double>(r.kept.size()) >= 0.9);
}

TEST_CASE("pseudo labelling with nothing above threshold is rejected") {
  const auto src = domains::sample_domain(two_gaussians(), 200, 8);
  PseudoLabelConfig cfg;
  cfg.confidence_threshold = 0.8;
  // Every target point sits on the decision boundary.
  try {
    (void)pseudo_label(src, nn::Tensor2(50, 2), cfg, 9);
    FAIL("expected rejection");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("coverage 0") != std::string::npos);
  }
}

TEST_CASE("classifier fits separable data") {
  const auto data = domains::sample_domain(two_gaussians(3.0, 0.5), 1000, 10);
  const auto net = train_classifier(data, {}, 11);
  CHECK(evaluate(net, data) >= 0.99);
}

TEST_CASE("classifier on shuffled labels is at chance") {
  auto train = domains::sample_domain(two_gaussians(), 500, 12);
  auto test = domains::sample_domain(two_gaussians(), 500, 13);
  Rng rng = make_rng(14);
  std::shuffle(train.labels.begin(), train.labels.end(), rng);
  std::shuffle(test.labels.begin(), test.labels.end(), rng);
  const double acc = evaluate(train_classifier(train, {}, 15), test);
  CHECK(acc == doctest::Approx(0.5).epsilon(0.2));  // 0.5 ± 0.1
}

TEST_CASE("classifier contract cases") {
  ClassifierConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  const auto one = domains::sample_domain(two_gaussians(), 50, 16).class_subset(0);
  CHECK_THROWS_AS((void)train_classifier(one, {}, 1), InvalidArgument);
  const auto data = domains::sample_domain(two_gaussians(), 50, 17);
  CHECK(train_classifier(data, {}, 3) == train_classifier(data, {}, 3));
}

TEST_CASE("evaluate: constant classifier, single point and permutation invariance") {
  nn::Network constant;
  constant.layers.push_back({nn::Tensor2(2, 2), nn::Tensor2(1, 2, std::vector<double>{1.0, 0.0}),
                             nn::Activation::identity()});
  const auto data = domains::sample_domain(two_gaussians(), 100, 18);
  CHECK(evaluate(constant, data) == 0.5);

  domains::LabeledDataset single{nn::Tensor2(1, 2, std::vector<double>{5.0, 0.0}), {0},
                                 domains::DomainTag::target, 2};
  const auto net = train_classifier(data, {}, 19);
  CHECK(evaluate(net, single) == 1.0);

  auto shuffled = data;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(20);
  std::shuffle(order.begin(), order.end(), rng);
  shuffled.points = nn::gather_rows(data.points, order);
  for (std::size_t i = 0; i < order.size(); ++i) shuffled.labels[i] = data.labels[order[i]];
  CHECK(evaluate(net, shuffled) == evaluate(net, data));
}

TEST_CASE("source-only classifier fails on a 180 degree rotation") {
  const auto spec = two_gaussians();
  const auto net = train_classifier(domains::sample_domain(spec, 500, 21), {}, 22);
  const auto turned = domains::sample_domain(domains::with_transform(spec, 180.0), 500, 23);
  CHECK(evaluate(net, turned) <= 0.1);
}

TEST_CASE("adaptation without fake samples is a pseudo-label baseline, and reproducible") {
  const auto spec = two_gaussians();
  const auto src = domains::sample_domain(spec, 200, 24);
  const auto tgt = targetify(domains::sample_domain(domains::with_transform(spec, 30.0), 200, 25));
  gan::GanTrainConfig g;
  g.epochs = 20;
  g.batch_size = 16;
  const auto base = run_adaptation(src, tgt, g, {}, {}, 0, 26);
  CHECK(base.mode == "pseudo_label_only");
  CHECK(base.fake_data.size() == 0);
  CHECK(base.models.empty());

  const auto a = run_adaptation(src, tgt, g, {}, {}, 50, 27);
  const auto b = run_adaptation(src, tgt, g, {}, {}, 50, 27);
  CHECK(a.mode == "middlegan");
  CHECK(a.fake_data.size() == 100);
  CHECK(a.source_only_acc == b.source_only_acc);
  CHECK(a.middlegan_acc == b.middlegan_acc);
  CHECK(a.fake_data == b.fake_data);
}

TEST_CASE("agnosticism with a zero rotation has zero delta") {
  const auto spec = two_gaussians();
  const auto s_tr = domains::sample_domain(spec, 200, 28), s_te = domains::sample_domain(spec, 200, 29);
  const auto t_tr = targetify(domains::sample_domain(spec, 200, 30));
  const auto t_te = targetify(domains::sample_domain(spec, 200, 31));
  gan::GanTrainConfig g;
  g.epochs = 20;
  const auto fake = gan::generate_all_classes(s_tr, t_tr, g, 100, 32).fake;
  const auto r = agnosticism_test(fake, s_tr, s_te, t_tr, t_te, 0.0, {}, 33);
  CHECK(r.max_delta == 0.0);
  CHECK(r.source_acc_plain == r.source_acc_transformed);
}

}  // TEST_SUITE
