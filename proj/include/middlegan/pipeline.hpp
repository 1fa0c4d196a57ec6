#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "middlegan/domains.hpp"
#include "middlegan/gan.hpp"
#include "middlegan/network.hpp"

namespace mgan::pipeline {

struct ClassifierConfig {
  std::vector<std::size_t> hidden{64, 64};
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  double learning_rate = 0.0002;
  double beta1 = 0.9;

  void validate() const;
};

enum class PseudoLabelMethod { source_classifier, nearest_class_centroid };

std::string to_string(PseudoLabelMethod method);
PseudoLabelMethod pseudo_label_method_from_string(const std::string& name);

struct PseudoLabelConfig {
  PseudoLabelMethod method = PseudoLabelMethod::source_classifier;
  double confidence_threshold = 0.8;
  ClassifierConfig classifier;  // used by source_classifier

  void validate() const;
};

struct PseudoLabelResult {
  domains::LabeledDataset labeled;  // kept target points, tagged target
  double coverage = 0.0;            // kept / total
  std::vector<std::size_t> kept;    // row indices into the unlabeled input
};

/// Labels target points with a classifier trained on the source (keeping
/// points whose top softmax probability reaches the threshold) or by the
/// nearest source class centroid (keeping all). Throws when nothing is kept.
PseudoLabelResult pseudo_label(const domains::LabeledDataset& source,
                               const nn::Tensor2& target_unlabeled, const PseudoLabelConfig& cfg,
                               std::uint64_t seed);

/// Dense softmax classifier (leaky hidden layers, logits out) trained with
/// cross-entropy and Adam on shuffled minibatches.
nn::Network train_classifier(const domains::LabeledDataset& data, const ClassifierConfig& cfg,
                             std::uint64_t seed);

/// argmax of the logits per row; ties go to the lower class index.
std::vector<std::size_t> predict_labels(const nn::Network& classifier, const nn::Tensor2& points);

/// Fraction of rows whose predicted label equals the stored label.
double evaluate(const nn::Network& classifier, const domains::LabeledDataset& test);

struct AdaptationResult {
  double source_only_acc = 0.0;
  double middlegan_acc = 0.0;
  double coverage = 0.0;
  double pseudo_label_acc = 0.0;  // audit against the hidden target labels
  std::string mode;               // "middlegan" or "pseudo_label_only"
  domains::LabeledDataset fake_data;
  std::vector<gan::MiddleGanModel> models;
};

/// Source-only baseline vs. a classifier trained on source ∪ pseudo-labelled
/// target ∪ generated samples; both scored on the target's hidden labels.
AdaptationResult run_adaptation(const domains::LabeledDataset& source,
                                const domains::LabeledDataset& target,
                                const gan::GanTrainConfig& gan_cfg,
                                const PseudoLabelConfig& pl_cfg, const ClassifierConfig& clf_cfg,
                                std::optional<std::size_t> n_fake_per_class, std::uint64_t seed);

struct AgnosticismReport {
  double source_acc_plain = 0.0;
  double target_acc_plain = 0.0;
  double source_acc_transformed = 0.0;
  double target_acc_transformed = 0.0;
  double max_delta = 0.0;
};

/// Trains two classifiers with the same seed, one with the generated samples
/// as-is and one with them rotated by `rotation_degrees`, and compares their
/// source/target test accuracies.
AgnosticismReport agnosticism_test(const domains::LabeledDataset& fake,
                                   const domains::LabeledDataset& source_train,
                                   const domains::LabeledDataset& source_test,
                                   const domains::LabeledDataset& target_train,
                                   const domains::LabeledDataset& target_test,
                                   double rotation_degrees, const ClassifierConfig& cfg,
                                   std::uint64_t seed);

}  // namespace mgan::pipeline
