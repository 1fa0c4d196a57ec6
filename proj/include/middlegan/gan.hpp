#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "middlegan/domains.hpp"
#include "middlegan/network.hpp"

namespace mgan::gan {

/// Generator objective. `saturating` minimises log(1−D_s(G(z))) + log(1−D_t(G(z)));
/// `non_saturating` maximises log D_s(G(z)) + log D_t(G(z)).
enum class GeneratorLoss { saturating, non_saturating };

std::string to_string(GeneratorLoss loss);
GeneratorLoss generator_loss_from_string(const std::string& name);

struct GanTrainConfig {
  /// One epoch is one D_s update, one D_t update and one G update.
  std::size_t epochs = 3000;
  std::size_t batch_size = 64;
  domains::NoiseSpec noise{2};
  double lr_generator = 0.0002;
  double lr_source = 0.0002;
  double lr_target = 0.0002;
  GeneratorLoss generator_loss = GeneratorLoss::saturating;
  double label_smoothing = 0.0;  // real-label target is 1 − label_smoothing
  std::vector<std::size_t> generator_hidden{32, 32};
  std::vector<std::size_t> discriminator_hidden{32, 32};
  double leaky_slope = 0.2;
  /// Generator output is output_scale · tanh(·). Zero picks 1.2 × the largest
  /// absolute coordinate seen in the two training sets.
  double output_scale = 0.0;

  /// Throws InvalidArgument. `epochs` may be zero here; config files require >= 1.
  void validate() const;
};

struct EpochRecord {
  double loss_g = 0.0;
  double loss_ds = 0.0;
  double loss_dt = 0.0;
  double v_estimate = 0.0;
};

/// Discriminator probabilities from the last completed epoch.
struct BatchProbabilities {
  std::vector<double> ds_real;
  std::vector<double> dt_real;
  std::vector<double> ds_fake;
  std::vector<double> dt_fake;
};

struct MiddleGanModel {
  nn::Network generator;    // noise → data, tanh output before scaling
  nn::Network disc_source;  // data → 1, sigmoid output
  nn::Network disc_target;
  std::size_t class_label = 0;
  std::size_t class_count = 1;
  std::size_t noise_dim = 2;
  double output_scale = 1.0;
  std::vector<EpochRecord> history;
  BatchProbabilities last_batch;
};

struct ValueEstimate {
  double value = 0.0;
  std::size_t clamped = 0;  // entries moved into [1e-7, 1 − 1e-7]
};

/// Monte-Carlo estimate of the three-player value:
///   mean log D_s(x_s) + mean log(1 − D_s(G(z))) + mean log D_t(x_t) + mean log(1 − D_t(G(z))).
ValueEstimate value_objective_estimate(std::span<const double> ds_real,
                                       std::span<const double> dt_real,
                                       std::span<const double> ds_fake,
                                       std::span<const double> dt_fake);

/// Freshly initialised generator and discriminators.
MiddleGanModel init_middlegan(std::size_t data_dim, std::size_t class_label, std::size_t class_count,
                              const GanTrainConfig& cfg, double output_scale, Rng& rng);

/// Trains one generator against a source and a target discriminator on a
/// single class. Deterministic in `seed`. Throws DivergenceError (with the
/// epoch) on non-finite losses or gradients.
MiddleGanModel train_middlegan(const domains::LabeledDataset& source_cls,
                               const domains::LabeledDataset& target_cls,
                               const GanTrainConfig& cfg, std::uint64_t seed);

/// Scaled generator output for a batch of noise.
nn::Tensor2 generator_sample(const MiddleGanModel& model, const nn::Tensor2& noise);

/// Sigmoid outputs of a discriminator as a flat vector.
std::vector<double> discriminate(const nn::Network& disc, const nn::Tensor2& points);

/// `n` generated points labelled with the model's class, tagged generated.
domains::LabeledDataset generate(const MiddleGanModel& model, std::size_t n, std::uint64_t seed);

struct GeneratedSet {
  domains::LabeledDataset fake;
  std::vector<MiddleGanModel> models;  // index = class label
};

/// One MiddleGAN per class, trained concurrently on derived seeds.
/// n_fake_per_class defaults to each class's source count.
GeneratedSet generate_all_classes(const domains::LabeledDataset& source,
                                  const domains::LabeledDataset& target_pseudo,
                                  const GanTrainConfig& cfg,
                                  std::optional<std::size_t> n_fake_per_class, std::uint64_t seed);

/// Trains a fresh discriminator (architecture from cfg, source learning rate)
/// to separate `real` from a frozen generator's samples for `steps` updates.
nn::Network fit_discriminator(const nn::Tensor2& real, const MiddleGanModel& frozen,
                              const GanTrainConfig& cfg, std::size_t steps, std::uint64_t seed);

/// `class,epoch,loss_g,loss_ds,loss_dt,v_estimate` with 1-based epochs.
void write_history_csv(std::span<const MiddleGanModel> models, std::ostream& out);

}  // namespace mgan::gan
