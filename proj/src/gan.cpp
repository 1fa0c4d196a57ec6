#include "middlegan/gan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <ostream>

#include "middlegan/adam.hpp"
#include "middlegan/error.hpp"
#include "middlegan/loss.hpp"

namespace mgan::gan {

namespace {

constexpr double kProbClamp = 1e-7;

double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

std::size_t single_class(const domains::LabeledDataset& d, const char* which) {
  if (d.size() == 0) throw InvalidArgument(std::string("train_middlegan: ") + which + " is empty");
  const std::size_t k = d.labels.front();
  for (auto l : d.labels) {
    if (l != k) {
      throw InvalidArgument(std::string("train_middlegan: ") + which +
                            " holds more than one class (" + std::to_string(k) + ", " +
                            std::to_string(l) + ")");
    }
  }
  return k;
}

nn::Tensor2 draw_batch(const nn::Tensor2& data, std::size_t batch, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, data.rows() - 1);
  std::vector<std::size_t> idx(batch);
  for (auto& i : idx) i = pick(rng);
  return nn::gather_rows(data, idx);
}

struct DiscStep {
  double loss = 0.0;
  std::vector<double> real_prob;
};

// One update of a discriminator on real vs. fake rows (equal counts).
DiscStep discriminator_step(nn::Network& disc, nn::AdamState& opt, const nn::Tensor2& real,
                            const nn::Tensor2& fake, double label_smoothing) {
  const nn::Tensor2 parts[] = {real, fake};
  const nn::Tensor2 both = nn::vstack(parts);
  const nn::ForwardCache cache = nn::forward(disc, both);
  std::vector<double> targets(both.rows(), 0.0);
  std::fill(targets.begin(), targets.begin() + static_cast<std::ptrdiff_t>(real.rows()),
            1.0 - label_smoothing);
  // Mean over 2B rows, doubled: mean real term + mean fake term.
  nn::LossResult loss = nn::bce_with_logits(cache.preactivations.back(), targets);
  loss.value *= 2.0;
  for (double& g : loss.grad.data()) g *= 2.0;
  const nn::Gradients grads =
      nn::backward(disc, cache, loss.grad, nn::UpstreamAt::final_preactivation);
  nn::adam_step(disc, grads, opt);

  DiscStep out;
  out.loss = loss.value;
  out.real_prob.assign(cache.output.data().begin(),
                       cache.output.data().begin() + static_cast<std::ptrdiff_t>(real.rows()));
  return out;
}

double max_abs(const nn::Tensor2& t) {
  double m = 0.0;
  for (double v : t.data()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

std::string to_string(GeneratorLoss loss) {
  return loss == GeneratorLoss::saturating ? "saturating" : "non_saturating";
}

GeneratorLoss generator_loss_from_string(const std::string& name) {
  if (name == "saturating") return GeneratorLoss::saturating;
  if (name == "non_saturating") return GeneratorLoss::non_saturating;
  throw InvalidArgument("unknown generator loss '" + name + "'");
}

void GanTrainConfig::validate() const {
  if (batch_size < 2) throw InvalidArgument("gan: batch_size must be >= 2");
  if (noise.dimension < 1) throw InvalidArgument("gan: noise dimension must be >= 1");
  if (!(lr_generator > 0.0) || !(lr_source > 0.0) || !(lr_target > 0.0)) {
    throw InvalidArgument("gan: learning rates must be > 0");
  }
  if (!(label_smoothing >= 0.0 && label_smoothing <= 0.2)) {
    throw InvalidArgument("gan: label_smoothing must be in [0, 0.2]");
  }
  if (!(output_scale >= 0.0)) throw InvalidArgument("gan: output_scale must be >= 0");
  if (!(leaky_slope >= 0.0)) throw InvalidArgument("gan: leaky_slope must be >= 0");
}

ValueEstimate value_objective_estimate(std::span<const double> ds_real,
                                       std::span<const double> dt_real,
                                       std::span<const double> ds_fake,
                                       std::span<const double> dt_fake) {
  if (ds_real.empty() || dt_real.empty() || ds_fake.empty() || dt_fake.empty()) {
    throw InvalidArgument("value_objective_estimate: empty probability set");
  }
  ValueEstimate est;
  auto mean_log = [&](std::span<const double> probs, bool complement) {
    double s = 0.0;
    for (double p : probs) {
      if (!(p >= kProbClamp && p <= 1.0 - kProbClamp)) ++est.clamped;
      const double c = std::clamp(std::isnan(p) ? 0.5 : p, kProbClamp, 1.0 - kProbClamp);
      s += std::log(complement ? 1.0 - c : c);
    }
    return s / static_cast<double>(probs.size());
  };
  est.value = mean_log(ds_real, false) + mean_log(ds_fake, true) + mean_log(dt_real, false) +
              mean_log(dt_fake, true);
  return est;
}

MiddleGanModel init_middlegan(std::size_t data_dim, std::size_t class_label,
                              std::size_t class_count, const GanTrainConfig& cfg,
                              double output_scale, Rng& rng) {
  const auto leaky = nn::Activation::leaky(cfg.leaky_slope);
  MiddleGanModel m;
  m.class_label = class_label;
  m.class_count = class_count;
  m.noise_dim = cfg.noise.dimension;
  m.output_scale = output_scale;
  m.generator = nn::make_mlp(cfg.noise.dimension, cfg.generator_hidden, data_dim, leaky,
                             nn::Activation::tanh(), rng);
  m.disc_source = nn::make_mlp(data_dim, cfg.discriminator_hidden, 1, leaky,
                               nn::Activation::sigmoid(), rng);
  m.disc_target = nn::make_mlp(data_dim, cfg.discriminator_hidden, 1, leaky,
                               nn::Activation::sigmoid(), rng);
  return m;
}

nn::Tensor2 generator_sample(const MiddleGanModel& model, const nn::Tensor2& noise) {
  nn::Tensor2 out = nn::predict(model.generator, noise);
  for (double& v : out.data()) v *= model.output_scale;
  return out;
}

std::vector<double> discriminate(const nn::Network& disc, const nn::Tensor2& points) {
  return nn::predict(disc, points).data();
}

MiddleGanModel train_middlegan(const domains::LabeledDataset& source_cls,
                               const domains::LabeledDataset& target_cls,
                               const GanTrainConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  source_cls.validate();
  target_cls.validate();
  const std::size_t ks = single_class(source_cls, "source");
  const std::size_t kt = single_class(target_cls, "target");
  if (ks != kt) {
    throw InvalidArgument("train_middlegan: source class " + std::to_string(ks) +
                          " does not match target class " + std::to_string(kt));
  }
  if (source_cls.dim() != target_cls.dim()) {
    throw ShapeError("train_middlegan: source is " + std::to_string(source_cls.dim()) +
                     "-D, target is " + std::to_string(target_cls.dim()) + "-D");
  }

  const double scale = cfg.output_scale > 0.0
                           ? cfg.output_scale
                           : 1.2 * std::max(max_abs(source_cls.points), max_abs(target_cls.points));
  Rng rng = make_rng(seed);
  MiddleGanModel model = init_middlegan(source_cls.dim(), ks,
                                        std::max(source_cls.class_count, target_cls.class_count),
                                        cfg, scale > 0.0 ? scale : 1.0, rng);

  auto opt_g = nn::AdamState::for_network(model.generator, nn::gan_adam(cfg.lr_generator));
  auto opt_s = nn::AdamState::for_network(model.disc_source, nn::gan_adam(cfg.lr_source));
  auto opt_t = nn::AdamState::for_network(model.disc_target, nn::gan_adam(cfg.lr_target));
  const std::size_t B = cfg.batch_size;
  const double inv_b = 1.0 / static_cast<double>(B);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    try {
      EpochRecord rec;

      const nn::Tensor2 xs = draw_batch(source_cls.points, B, rng);
      const nn::Tensor2 fake_s = generator_sample(model, domains::sample_noise(cfg.noise, B, rng));
      DiscStep ds = discriminator_step(model.disc_source, opt_s, xs, fake_s, cfg.label_smoothing);
      rec.loss_ds = ds.loss;

      const nn::Tensor2 xt = draw_batch(target_cls.points, B, rng);
      const nn::Tensor2 fake_t = generator_sample(model, domains::sample_noise(cfg.noise, B, rng));
      DiscStep dt = discriminator_step(model.disc_target, opt_t, xt, fake_t, cfg.label_smoothing);
      rec.loss_dt = dt.loss;

      // Generator update against both discriminators at once.
      const nn::Tensor2 z = domains::sample_noise(cfg.noise, B, rng);
      const nn::ForwardCache gen = nn::forward(model.generator, z);
      nn::Tensor2 fake = gen.output;
      for (double& v : fake.data()) v *= model.output_scale;
      const nn::ForwardCache cs = nn::forward(model.disc_source, fake);
      const nn::ForwardCache ct = nn::forward(model.disc_target, fake);

      nn::Tensor2 gs(B, 1), gt(B, 1);
      double loss_g = 0.0;
      for (std::size_t i = 0; i < B; ++i) {
        const double zs = cs.preactivations.back()(i, 0);
        const double zt = ct.preactivations.back()(i, 0);
        if (cfg.generator_loss == GeneratorLoss::saturating) {
          // log(1 − σ(z)) = −softplus(z)
          loss_g -= (nn::softplus(zs) + nn::softplus(zt)) * inv_b;
          gs(i, 0) = -sigmoid(zs) * inv_b;
          gt(i, 0) = -sigmoid(zt) * inv_b;
        } else {
          // −log σ(z) = softplus(−z)
          loss_g += (nn::softplus(-zs) + nn::softplus(-zt)) * inv_b;
          gs(i, 0) = (sigmoid(zs) - 1.0) * inv_b;
          gt(i, 0) = (sigmoid(zt) - 1.0) * inv_b;
        }
      }
      const nn::Gradients back_s =
          nn::backward(model.disc_source, cs, gs, nn::UpstreamAt::final_preactivation);
      const nn::Gradients back_t =
          nn::backward(model.disc_target, ct, gt, nn::UpstreamAt::final_preactivation);
      nn::Tensor2 upstream = back_s.input;
      for (std::size_t i = 0; i < upstream.size(); ++i) {
        upstream.data()[i] = (upstream.data()[i] + back_t.input.data()[i]) * model.output_scale;
      }
      const nn::Gradients g_grads = nn::backward(model.generator, gen, upstream);
      nn::adam_step(model.generator, g_grads, opt_g);
      rec.loss_g = loss_g;

      model.last_batch = {std::move(ds.real_prob), std::move(dt.real_prob), cs.output.data(),
                          ct.output.data()};
      rec.v_estimate = value_objective_estimate(model.last_batch.ds_real, model.last_batch.dt_real,
                                                model.last_batch.ds_fake, model.last_batch.dt_fake)
                           .value;
      if (!std::isfinite(rec.loss_g) || !std::isfinite(rec.loss_ds) || !std::isfinite(rec.loss_dt)) {
        throw DivergenceError("non-finite loss", epoch);
      }
      model.history.push_back(rec);
    } catch (const DivergenceError& e) {
      throw DivergenceError("train_middlegan: class " + std::to_string(ks) + " diverged at epoch " +
                                std::to_string(epoch) + ": " + e.what(),
                            epoch);
    }
  }
  return model;
}

domains::LabeledDataset generate(const MiddleGanModel& model, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("generate: n must be >= 1");
  Rng rng = make_rng(seed);
  domains::LabeledDataset out;
  out.points = generator_sample(model, domains::sample_noise({model.noise_dim}, n, rng));
  out.labels.assign(n, model.class_label);
  out.tag = domains::DomainTag::generated;
  out.class_count = model.class_count;
  return out;
}

GeneratedSet generate_all_classes(const domains::LabeledDataset& source,
                                  const domains::LabeledDataset& target_pseudo,
                                  const GanTrainConfig& cfg,
                                  std::optional<std::size_t> n_fake_per_class, std::uint64_t seed) {
  cfg.validate();
  source.validate();
  target_pseudo.validate();
  if (source.class_count != target_pseudo.class_count) {
    throw InvalidArgument("generate_all_classes: source has " + std::to_string(source.class_count) +
                          " classes, target has " + std::to_string(target_pseudo.class_count));
  }
  const std::size_t K = source.class_count;
  std::vector<domains::LabeledDataset> src(K), tgt(K);
  for (std::size_t k = 0; k < K; ++k) {
    src[k] = source.class_subset(k);
    tgt[k] = target_pseudo.class_subset(k);
    if (src[k].size() == 0 || tgt[k].size() == 0) {
      throw InvalidArgument("generate_all_classes: class " + std::to_string(k) + " is absent from " +
                            (src[k].size() == 0 ? "source" : "target"));
    }
    if (src[k].size() < cfg.batch_size || tgt[k].size() < cfg.batch_size) {
      throw InvalidArgument("generate_all_classes: class " + std::to_string(k) + " has fewer than " +
                            "batch_size = " + std::to_string(cfg.batch_size) + " points");
    }
  }

  std::vector<std::future<MiddleGanModel>> jobs;
  for (std::size_t k = 0; k < K; ++k) {
    jobs.push_back(std::async(std::launch::async, [&, k] {
      return train_middlegan(src[k], tgt[k], cfg, derive_seed(seed, k));
    }));
  }

  GeneratedSet out;
  std::vector<domains::LabeledDataset> fakes;
  for (std::size_t k = 0; k < K; ++k) {
    out.models.push_back(jobs[k].get());
    const std::size_t n = n_fake_per_class.value_or(src[k].size());
    if (n > 0) fakes.push_back(generate(out.models.back(), n, derive_seed(derive_seed(seed, k), 1)));
  }
  if (fakes.empty()) {
    out.fake = {nn::Tensor2(0, source.dim()), {}, domains::DomainTag::generated, K};
  } else {
    out.fake = domains::concat(fakes, domains::DomainTag::generated);
  }
  return out;
}

nn::Network fit_discriminator(const nn::Tensor2& real, const MiddleGanModel& frozen,
                              const GanTrainConfig& cfg, std::size_t steps, std::uint64_t seed) {
  cfg.validate();
  if (real.rows() == 0) throw InvalidArgument("fit_discriminator: no real samples");
  Rng rng = make_rng(seed);
  nn::Network disc = nn::make_mlp(real.cols(), cfg.discriminator_hidden, 1,
                                  nn::Activation::leaky(cfg.leaky_slope), nn::Activation::sigmoid(),
                                  rng);
  auto opt = nn::AdamState::for_network(disc, nn::gan_adam(cfg.lr_source));
  for (std::size_t s = 0; s < steps; ++s) {
    const nn::Tensor2 x = draw_batch(real, cfg.batch_size, rng);
    const nn::Tensor2 f =
        generator_sample(frozen, domains::sample_noise({frozen.noise_dim}, cfg.batch_size, rng));
    try {
      discriminator_step(disc, opt, x, f, 0.0);
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string("fit_discriminator: ") + e.what(), s);
    }
  }
  return disc;
}

void write_history_csv(std::span<const MiddleGanModel> models, std::ostream& out) {
  out << "class,epoch,loss_g,loss_ds,loss_dt,v_estimate\n";
  char buf[128];
  for (const auto& m : models) {
    for (std::size_t e = 0; e < m.history.size(); ++e) {
      const auto& r = m.history[e];
      std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g", r.loss_g, r.loss_ds, r.loss_dt,
                    r.v_estimate);
      out << m.class_label << ',' << e + 1 << ',' << buf << '\n';
    }
  }
}

}  // namespace mgan::gan
