#include "middlegan/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "middlegan/adam.hpp"
#include "middlegan/error.hpp"
#include "middlegan/loss.hpp"

namespace mgan::pipeline {

namespace {

std::size_t distinct_classes(const domains::LabeledDataset& d) {
  auto counts = d.class_counts();
  return static_cast<std::size_t>(
      std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }));
}

}  // namespace

void ClassifierConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("classifier: epochs must be >= 1");
  if (batch_size < 1) throw InvalidArgument("classifier: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw InvalidArgument("classifier: learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw InvalidArgument("classifier: beta1 must be in [0, 1)");
}

std::string to_string(PseudoLabelMethod method) {
  return method == PseudoLabelMethod::source_classifier ? "source_classifier"
                                                        : "nearest_class_centroid";
}

PseudoLabelMethod pseudo_label_method_from_string(const std::string& name) {
  if (name == "source_classifier") return PseudoLabelMethod::source_classifier;
  if (name == "nearest_class_centroid") return PseudoLabelMethod::nearest_class_centroid;
  throw InvalidArgument("unknown pseudo-label method '" + name + "'");
}

void PseudoLabelConfig::validate() const {
  if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0)) {
    throw InvalidArgument("pseudo_label: confidence_threshold must be in [0, 1]");
  }
  classifier.validate();
}

nn::Network train_classifier(const domains::LabeledDataset& data, const ClassifierConfig& cfg,
                             std::uint64_t seed) {
  cfg.validate();
  data.validate();
  if (distinct_classes(data) < 2) {
    throw InvalidArgument("train_classifier: need at least 2 classes present, found " +
                          std::to_string(distinct_classes(data)));
  }
  Rng rng = make_rng(seed);
  nn::Network net = nn::make_mlp(data.dim(), cfg.hidden, data.class_count,
                                 nn::Activation::leaky(), nn::Activation::identity(), rng);
  auto opt = nn::AdamState::for_network(net, {cfg.learning_rate, cfg.beta1, 0.999, 1e-8});

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const nn::Tensor2 x = nn::gather_rows(data.points, idx);
      std::vector<std::size_t> y;
      y.reserve(idx.size());
      for (auto i : idx) y.push_back(data.labels[i]);
      const nn::ForwardCache cache = nn::forward(net, x);
      const nn::LossResult loss = nn::softmax_cross_entropy(cache.output, y);
      if (!std::isfinite(loss.value)) {
        throw DivergenceError("train_classifier: non-finite loss at epoch " + std::to_string(epoch),
                              epoch);
      }
      nn::adam_step(net, nn::backward(net, cache, loss.grad), opt);
    }
  }
  return net;
}

std::vector<std::size_t> predict_labels(const nn::Network& classifier, const nn::Tensor2& points) {
  const nn::Tensor2 logits = nn::predict(classifier, points);
  std::vector<std::size_t> out(points.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto r = logits.row(i);
    out[i] = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

double evaluate(const nn::Network& classifier, const domains::LabeledDataset& test) {
  test.validate();
  const auto pred = predict_labels(classifier, test.points);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == test.labels[i];
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

PseudoLabelResult pseudo_label(const domains::LabeledDataset& source,
                               const nn::Tensor2& target_unlabeled, const PseudoLabelConfig& cfg,
                               std::uint64_t seed) {
  cfg.validate();
  source.validate();
  if (distinct_classes(source) < 2) throw InvalidArgument("pseudo_label: source needs >= 2 classes");
  if (target_unlabeled.rows() == 0) throw InvalidArgument("pseudo_label: no target points");
  if (target_unlabeled.cols() != source.dim()) {
    throw ShapeError("pseudo_label: target is " + std::to_string(target_unlabeled.cols()) +
                     "-D, source is " + std::to_string(source.dim()) + "-D");
  }

  std::vector<std::size_t> labels(target_unlabeled.rows());
  PseudoLabelResult result;
  if (cfg.method == PseudoLabelMethod::source_classifier) {
    const nn::Network clf = train_classifier(source, cfg.classifier, seed);
    const nn::Tensor2 probs = nn::softmax(nn::predict(clf, target_unlabeled));
    for (std::size_t i = 0; i < probs.rows(); ++i) {
      auto r = probs.row(i);
      const auto best = std::max_element(r.begin(), r.end());
      labels[i] = static_cast<std::size_t>(best - r.begin());
      if (*best >= cfg.confidence_threshold) result.kept.push_back(i);
    }
  } else {
    std::vector<std::vector<double>> centroids(source.class_count);
    for (std::size_t k = 0; k < source.class_count; ++k) centroids[k] = source.class_centroid(k);
    for (std::size_t i = 0; i < target_unlabeled.rows(); ++i) {
      auto p = target_unlabeled.row(i);
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < centroids.size(); ++k) {
        if (centroids[k].empty()) continue;
        double d2 = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) d2 += (p[j] - centroids[k][j]) * (p[j] - centroids[k][j]);
        if (d2 < best) {
          best = d2;
          labels[i] = k;
        }
      }
      result.kept.push_back(i);
    }
  }

  result.coverage =
      static_cast<double>(result.kept.size()) / static_cast<double>(target_unlabeled.rows());
  if (result.kept.empty()) {
    throw InvalidArgument("pseudo_label: no target point reaches confidence " +
                          std::to_string(cfg.confidence_threshold) + " (coverage 0)");
  }
  result.labeled.points = nn::gather_rows(target_unlabeled, result.kept);
  for (auto i : result.kept) result.labeled.labels.push_back(labels[i]);
  result.labeled.tag = domains::DomainTag::target;
  result.labeled.class_count = source.class_count;
  return result;
}

AdaptationResult run_adaptation(const domains::LabeledDataset& source,
                                const domains::LabeledDataset& target,
                                const gan::GanTrainConfig& gan_cfg,
                                const PseudoLabelConfig& pl_cfg, const ClassifierConfig& clf_cfg,
                                std::optional<std::size_t> n_fake_per_class, std::uint64_t seed) {
  source.validate();
  target.validate();
  if (source.class_count != target.class_count) {
    throw InvalidArgument("run_adaptation: source and target class counts differ");
  }
  const std::uint64_t clf_seed = derive_seed(seed, 0);
  const std::uint64_t pl_seed = derive_seed(seed, 1);
  const std::uint64_t gan_seed = derive_seed(seed, 2);

  AdaptationResult result;
  const nn::Network source_only = train_classifier(source, clf_cfg, clf_seed);
  result.source_only_acc = evaluate(source_only, target);

  const PseudoLabelResult pl = pseudo_label(source, target.points, pl_cfg, pl_seed);
  result.coverage = pl.coverage;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < pl.kept.size(); ++i) agree += pl.labeled.labels[i] == target.labels[pl.kept[i]];
  result.pseudo_label_acc = static_cast<double>(agree) / static_cast<double>(pl.kept.size());

  std::vector<domains::LabeledDataset> parts{source, pl.labeled};
  if (n_fake_per_class && *n_fake_per_class == 0) {
    result.mode = "pseudo_label_only";
    result.fake_data = {nn::Tensor2(0, source.dim()), {}, domains::DomainTag::generated,
                        source.class_count};
  } else {
    result.mode = "middlegan";
    gan::GeneratedSet gen =
        gan::generate_all_classes(source, pl.labeled, gan_cfg, n_fake_per_class, gan_seed);
    result.fake_data = std::move(gen.fake);
    result.models = std::move(gen.models);
    parts.push_back(result.fake_data);
  }
  const nn::Network adapted =
      train_classifier(domains::concat(parts, domains::DomainTag::source), clf_cfg, clf_seed);
  result.middlegan_acc = evaluate(adapted, target);
  return result;
}

AgnosticismReport agnosticism_test(const domains::LabeledDataset& fake,
                                   const domains::LabeledDataset& source_train,
                                   const domains::LabeledDataset& source_test,
                                   const domains::LabeledDataset& target_train,
                                   const domains::LabeledDataset& target_test,
                                   double rotation_degrees, const ClassifierConfig& cfg,
                                   std::uint64_t seed) {
  std::vector<domains::LabeledDataset> plain{source_train, target_train};
  std::vector<domains::LabeledDataset> turned{source_train, target_train};
  if (fake.size() > 0) {
    plain.push_back(fake);
    turned.push_back(domains::transform_dataset(fake, rotation_degrees));
  }
  const nn::Network a =
      train_classifier(domains::concat(plain, domains::DomainTag::source), cfg, seed);
  const nn::Network b =
      train_classifier(domains::concat(turned, domains::DomainTag::source), cfg, seed);

  AgnosticismReport r;
  r.source_acc_plain = evaluate(a, source_test);
  r.target_acc_plain = evaluate(a, target_test);
  r.source_acc_transformed = evaluate(b, source_test);
  r.target_acc_transformed = evaluate(b, target_test);
  r.max_delta = std::max(std::abs(r.source_acc_plain - r.source_acc_transformed),
                         std::abs(r.target_acc_plain - r.target_acc_transformed));
  return r;
}

}  // namespace mgan::pipeline
