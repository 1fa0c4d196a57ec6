#include "middlegan/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>

#include "middlegan/error.hpp"
#include "middlegan/gradcheck.hpp"
#include "middlegan/io.hpp"
#include "middlegan/oracles.hpp"
#include "middlegan/svg.hpp"

namespace mgan::runner {

using json = nlohmann::ordered_json;

namespace {

bool is_diagonal(const std::vector<double>& cov, std::size_t d) {
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (i != j && cov[i * d + j] != 0.0) return false;
    }
  }
  return true;
}

std::string csv_of(const domains::LabeledDataset& d) { return domains::to_csv(d); }

std::string grid_csv(const oracle::DensityGrid& g) {
  std::ostringstream os;
  oracle::write_grid_csv(g, os);
  return os.str();
}

std::string history_csv(std::span<const gan::MiddleGanModel> models) {
  std::ostringstream os;
  gan::write_history_csv(models, os);
  return os.str();
}

double tail_mean_v(const gan::MiddleGanModel& m) {
  const std::size_t n = std::min<std::size_t>(100, m.history.size());
  if (n == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = m.history.size() - n; i < m.history.size(); ++i) s += m.history[i].v_estimate;
  return s / static_cast<double>(n);
}

oracle::DensityGrid dirichlet(const oracle::GridSpec& grid, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(grid.cell_count());
  for (auto& x : w) x = e(rng);
  return oracle::DensityGrid::from_weights(grid, std::move(w));
}

domains::LabeledDataset as_target(domains::LabeledDataset d) {
  d.tag = domains::DomainTag::target;
  return d;
}

void maybe_scatter(const std::string& dir, const std::vector<domains::LabeledDataset>& sets,
                   const std::string& title) {
  if (dir.empty() || sets.empty() || sets.front().dim() != 2) return;
  ScatterStyle style;
  style.title = title;
  emit_scatter_svg(sets, style, std::filesystem::path(dir) / "scatter.svg");
}

void write(const std::string& dir, const std::string& name, const std::string& contents) {
  if (!dir.empty()) write_file_atomic(std::filesystem::path(dir) / name, contents);
}

// ---------------------------------------------------------------------------

json run_gradcheck(const ExperimentConfig& cfg, std::uint64_t seed) {
  Rng rng = make_rng(derive_seed(seed, 0));
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  const nn::ActivationKind kinds[] = {nn::ActivationKind::leaky_rectifier, nn::ActivationKind::tanh,
                                      nn::ActivationKind::sigmoid, nn::ActivationKind::identity};
  std::normal_distribution<double> normal(0.0, 1.0);

  json archs = json::array();
  double worst = 0.0;
  for (std::size_t a = 0; a < cfg.gradcheck.architectures; ++a) {
    const std::size_t in = pick(1, 4);
    std::vector<std::size_t> hidden(pick(1, 3));
    for (auto& h : hidden) h = pick(1, 8);
    const std::size_t out = pick(1, 3);
    nn::Network net = nn::make_mlp(in, hidden, out, nn::Activation::leaky(),
                                   nn::Activation::identity(), rng);
    std::string desc = std::to_string(in);
    for (auto& layer : net.layers) {
      layer.activation = {kinds[pick(0, 3)], 0.2};
      desc += "-" + std::to_string(layer.weight.cols()) + "(" +
              nn::to_string(layer.activation.kind) + ")";
    }
    nn::Tensor2 batch(cfg.gradcheck.batch, in);
    for (std::size_t i = 0; i < batch.rows(); ++i) {
      for (std::size_t j = 0; j < in; ++j) batch(i, j) = normal(rng);
    }
    nn::Tensor2 target(cfg.gradcheck.batch, out);
    for (std::size_t i = 0; i < target.rows(); ++i) {
      for (std::size_t j = 0; j < out; ++j) target(i, j) = normal(rng);
    }
    const auto r = nn::gradient_check(
        net, [&](const nn::Tensor2& y) { return nn::mean_squared_error(y, target); }, batch,
        cfg.gradcheck.fd_step);
    worst = std::max(worst, r.max_relative_error);
    archs.push_back({{"architecture", desc},
                     {"parameters", net.param_count()},
                     {"max_relative_error", r.max_relative_error}});
  }
  return {{"architectures", archs},
          {"max_relative_error", worst},
          {"passed", worst < cfg.gradcheck.max_error}};
}

json run_oracle_centroid(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& dir) {
  const auto grid = cfg.grid.spec(cfg.source->dimension);
  json classes = json::array();
  for (std::size_t k = 0; k < cfg.source->class_count; ++k) {
    const auto ps = domain_density(*cfg.source, k, grid, cfg.density_samples, derive_seed(seed, 2 * k));
    const auto pt =
        domain_density(*cfg.target, k, grid, cfg.density_samples, derive_seed(seed, 2 * k + 1));
    const auto c = oracle::jsd_centroid(ps.density, pt.density, cfg.centroid);
    const std::vector<oracle::DensityGrid> parts{ps.density, pt.density};
    const std::vector<double> half{0.5, 0.5};
    write(dir, "centroid_class" + std::to_string(k) + ".csv", grid_csv(c.centroid));
    classes.push_back({{"class", k},
                       {"density_exact", ps.exact && pt.exact},
                       {"centroid_objective", c.objective},
                       {"sweep_alpha", c.sweep_alpha},
                       {"sweep_objective", c.sweep_objective},
                       {"descent_steps", c.trace.empty() ? 0 : c.trace.size() - 1},
                       {"tv_to_even_mixture",
                        oracle::total_variation(c.centroid, oracle::mixture(parts, half))},
                       {"criterion_at_centroid",
                        oracle::virtual_criterion(ps.density, pt.density, c.centroid)}});
  }
  return {{"classes", classes}, {"passed", true}};
}

json run_verify_identity(const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto grid = cfg.grid.spec(cfg.source->dimension);
  Rng rng = make_rng(derive_seed(seed, 0));
  double residual = 0.0;
  for (std::size_t i = 0; i < cfg.identity.triples; ++i) {
    const auto ps = dirichlet(grid, rng);
    const auto pt = dirichlet(grid, rng);
    const auto pm = dirichlet(grid, rng);
    const auto ds = oracle::optimal_discriminator(ps, pm);
    const auto dt = oracle::optimal_discriminator(pt, pm);
    const double direct = oracle::grid_value_objective(ps, pt, pm, ds.value, dt.value);
    residual = std::max(residual, std::abs(direct - oracle::virtual_criterion(ps, pt, pm)));
  }
  bool passed = residual < cfg.identity.tolerance;

  json classes = json::array();
  for (std::size_t k = 0; k < cfg.source->class_count; ++k) {
    const auto ps = domain_density(*cfg.source, k, grid, cfg.density_samples, derive_seed(seed, 10 + 2 * k));
    const auto pt =
        domain_density(*cfg.target, k, grid, cfg.density_samples, derive_seed(seed, 11 + 2 * k));
    const auto rep = oracle::verify_theorem2(ps.density, pt.density, cfg.centroid, cfg.probes,
                                             derive_seed(seed, 1), cfg.probe_tolerance);
    passed = passed && rep.passed;
    json c = {{"class", k},
              {"centroid_objective", rep.centroid.objective},
              {"criterion_at_centroid", rep.criterion_at_centroid},
              {"probes_checked", rep.probes_checked},
              {"max_violation", rep.max_violation},
              {"trace_monotone", rep.trace_monotone},
              {"passed", rep.passed}};
    if (rep.failing_probe) c["failing_probe"] = *rep.failing_probe;
    classes.push_back(std::move(c));
  }
  return {{"identity_triples", cfg.identity.triples},
          {"identity_max_residual", residual},
          {"identity_tolerance", cfg.identity.tolerance},
          {"theorem2", classes},
          {"passed", passed}};
}

json run_gan_train(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& dir) {
  const auto source = domains::sample_domain(*cfg.source, cfg.n_per_class, derive_seed(seed, 0));
  const auto target =
      as_target(domains::sample_domain(*cfg.target, cfg.n_per_class, derive_seed(seed, 1)));
  auto gen = gan::generate_all_classes(source, target, cfg.gan, cfg.n_fake_per_class,
                                       derive_seed(seed, 2));
  const auto grid = cfg.grid.spec(cfg.source->dimension);

  json classes = json::array();
  for (std::size_t k = 0; k < gen.models.size(); ++k) {
    const auto& model = gen.models[k];
    const auto ps = domain_density(*cfg.source, k, grid, cfg.density_samples, derive_seed(seed, 10 + 3 * k));
    const auto pt =
        domain_density(*cfg.target, k, grid, cfg.density_samples, derive_seed(seed, 11 + 3 * k));
    const auto samples = gan::generate(model, cfg.density_samples, derive_seed(seed, 12 + 3 * k));
    const auto pg = oracle::estimate_density(samples, grid);
    const auto c = oracle::jsd_centroid(ps.density, pt.density, cfg.centroid);
    const std::vector<oracle::DensityGrid> parts{ps.density, pt.density};
    const std::vector<double> half{0.5, 0.5};
    write(dir, "centroid_class" + std::to_string(k) + ".csv", grid_csv(c.centroid));
    write(dir, "generated_density_class" + std::to_string(k) + ".csv", grid_csv(pg));
    classes.push_back({{"class", k},
                       {"tv_to_centroid", oracle::total_variation(pg, c.centroid)},
                       {"tv_to_even_mixture",
                        oracle::total_variation(pg, oracle::mixture(parts, half))},
                       {"centroid_objective", c.objective},
                       {"generated_objective", oracle::centroid_objective(ps.density, pt.density, pg)},
                       {"criterion_at_generated", oracle::virtual_criterion(ps.density, pt.density, pg)},
                       {"v_estimate_tail_mean", tail_mean_v(model)},
                       {"final_loss_g", model.history.empty() ? 0.0 : model.history.back().loss_g}});
  }
  write(dir, "history.csv", history_csv(gen.models));
  write(dir, "generated.csv", csv_of(gen.fake));
  maybe_scatter(dir, {source, target, gen.fake}, "source, target and generated samples");
  return {{"classes", classes}, {"passed", true}};
}

json run_adaptation_kind(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& dir,
                         const std::string& digest) {
  const auto source = domains::sample_domain(*cfg.source, cfg.n_per_class, derive_seed(seed, 0));
  const auto target =
      as_target(domains::sample_domain(*cfg.target, cfg.n_per_class, derive_seed(seed, 1)));
  const auto r = pipeline::run_adaptation(source, target, cfg.gan, cfg.pseudo_label, cfg.classifier,
                                          cfg.n_fake_per_class, derive_seed(seed, 2));
  write(dir, "history.csv", history_csv(r.models));
  write(dir, "generated.csv", csv_of(r.fake_data));
  std::vector<domains::LabeledDataset> sets{source, target};
  if (r.fake_data.size() > 0) sets.push_back(r.fake_data);
  maybe_scatter(dir, sets, "adaptation: source, target and generated samples");
  return {{"config_digest", digest},
          {"seed", seed},
          {"mode", r.mode},
          {"source_only_acc", r.source_only_acc},
          {"middlegan_acc", r.middlegan_acc},
          {"coverage", r.coverage},
          {"pseudo_label_acc", r.pseudo_label_acc},
          {"agnosticism", nullptr},
          {"passed", true}};
}

json run_agnosticism_kind(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& dir,
                          const std::string& digest) {
  const auto& spec = *cfg.source;
  const auto s_tr = domains::sample_domain(spec, cfg.n_per_class, derive_seed(seed, 0));
  const auto s_te = domains::sample_domain(spec, cfg.n_test_per_class, derive_seed(seed, 1));
  const auto t_tr = as_target(domains::sample_domain(*cfg.target, cfg.n_per_class, derive_seed(seed, 2)));
  const auto t_te =
      as_target(domains::sample_domain(*cfg.target, cfg.n_test_per_class, derive_seed(seed, 3)));
  const auto gen = gan::generate_all_classes(s_tr, t_tr, cfg.gan, cfg.n_fake_per_class, derive_seed(seed, 4));
  const double rotation = cfg.target_transform.rotation_degrees;
  const auto r = pipeline::agnosticism_test(gen.fake, s_tr, s_te, t_tr, t_te, rotation,
                                            cfg.classifier, derive_seed(seed, 5));
  write(dir, "history.csv", history_csv(gen.models));
  write(dir, "generated.csv", csv_of(gen.fake));
  if (gen.fake.size() > 0 && spec.dimension == 2) {
    maybe_scatter(dir, {s_tr, t_tr, gen.fake, domains::transform_dataset(gen.fake, rotation)},
                  "source, target, generated and rotated generated samples");
  }
  return {{"config_digest", digest},
          {"seed", seed},
          {"source_only_acc", nullptr},
          {"middlegan_acc", nullptr},
          {"coverage", nullptr},
          {"agnosticism",
           {{"rotation_degrees", rotation},
            {"source_acc_plain", r.source_acc_plain},
            {"target_acc_plain", r.target_acc_plain},
            {"source_acc_transformed", r.source_acc_transformed},
            {"target_acc_transformed", r.target_acc_transformed},
            {"max_delta", r.max_delta}}},
          {"passed", true}};
}

double median_of(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace

DomainDensity domain_density(const domains::DomainSpec& spec, std::optional<std::size_t> label,
                             const oracle::GridSpec& grid, std::size_t samples, std::uint64_t seed) {
  spec.validate();
  if (grid.dimension() != spec.dimension) {
    throw ShapeError("domain_density: grid is " + std::to_string(grid.dimension()) +
                     "-D, domain is " + std::to_string(spec.dimension) + "-D");
  }
  if (label && *label >= spec.class_count) throw InvalidArgument("domain_density: label out of range");
  const std::size_t d = spec.dimension;

  bool exact = spec.family == domains::Family::gaussian_mixture;
  double rotation = spec.transform ? spec.transform->rotation_degrees : 0.0;
  exact = exact && std::fmod(rotation, 90.0) == 0.0;
  for (const auto& c : spec.classes) exact = exact && is_diagonal(c.covariance, d);

  if (exact) {
    std::vector<oracle::DensityGrid> parts;
    for (std::size_t k = 0; k < spec.class_count; ++k) {
      if (label && k != *label) continue;
      const auto& c = spec.classes[k];
      domains::LabeledDataset m{nn::Tensor2(1, d), {0}, domains::DomainTag::source, 1};
      std::vector<double> sd(d);
      for (std::size_t j = 0; j < d; ++j) {
        m.points(0, j) = c.mean[j];
        sd[j] = std::sqrt(c.covariance[j * d + j]);
      }
      if (spec.transform) {
        m = domains::transform_dataset(m, rotation, spec.transform->shift);
        if (d >= 2 && (rotation == 90.0 || rotation == 270.0)) std::swap(sd[0], sd[1]);
      }
      parts.push_back(oracle::discretize_gaussian(grid, m.points.row(0), sd));
    }
    const std::vector<double> w(parts.size(), 1.0);
    return {parts.size() == 1 ? parts.front() : oracle::mixture(parts, w), true};
  }

  const std::size_t per_class = label ? samples : std::max<std::size_t>(1, samples / spec.class_count);
  domains::LabeledDataset data = domains::sample_domain(spec, per_class, seed);
  if (label) data = data.class_subset(*label);
  return {oracle::estimate_density(data, grid), false};
}

json run_seed(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& artifact_dir) {
  const std::string digest = config_digest(cfg);
  json result;
  switch (cfg.kind) {
    case ExperimentKind::gradcheck:
      result = run_gradcheck(cfg, seed);
      break;
    case ExperimentKind::oracle_centroid:
      result = run_oracle_centroid(cfg, seed, artifact_dir);
      break;
    case ExperimentKind::verify_identity:
      result = run_verify_identity(cfg, seed);
      break;
    case ExperimentKind::gan_train:
      result = run_gan_train(cfg, seed, artifact_dir);
      break;
    case ExperimentKind::adaptation:
      return run_adaptation_kind(cfg, seed, artifact_dir, digest);
    case ExperimentKind::agnosticism:
      return run_agnosticism_kind(cfg, seed, artifact_dir, digest);
  }
  json out = {{"config_digest", digest}, {"seed", seed}};
  out.update(result);
  return out;
}

json aggregate_numeric(const std::vector<json>& per_seed) {
  std::map<std::string, std::vector<double>> values;
  for (const auto& s : per_seed) {
    const json flat = s.flatten();
    for (const auto& [path, v] : flat.items()) {
      if (path == "/seed" || !v.is_number()) continue;
      values[path].push_back(v.get<double>());
    }
  }
  json out = json::object();
  for (const auto& [path, xs] : values) {
    out[path] = {{"median", median_of(xs)},
                 {"min", *std::min_element(xs.begin(), xs.end())},
                 {"max", *std::max_element(xs.begin(), xs.end())},
                 {"count", xs.size()}};
  }
  return out;
}

json RunReport::to_json() const {
  json j = {{"tool_version", tool_version},
            {"config_digest", config_digest},
            {"kind", to_string(kind)}};
  if (kind == ExperimentKind::adaptation || kind == ExperimentKind::agnosticism) {
    j["pseudo_labeler"] = kPseudoLabelerNote;
  }
  j["passed"] = passed;
  j["failures"] = failures;
  j["per_seed"] = per_seed;
  j["aggregate"] = aggregate;
  return j;
}

RunReport run_experiment(const ExperimentConfig& cfg) {
  RunReport report;
  report.config_digest = config_digest(cfg);
  report.kind = cfg.kind;
  const std::filesystem::path root(cfg.output_dir);
  try {
    std::filesystem::create_directories(root);
    write_file_atomic(root / "config.cfg", serialize_config(cfg));
    for (auto seed : cfg.seeds) {
      const auto dir = root / ("seed_" + std::to_string(seed));
      json r = run_seed(cfg, seed, dir.string());
      if (!r.value("passed", true)) {
        report.passed = false;
        report.failures.push_back("seed " + std::to_string(seed) + ": verification failed");
      }
      report.per_seed.push_back(std::move(r));
    }
    report.aggregate = aggregate_numeric(report.per_seed);
    write_file_atomic(root / "report.json", report.to_json().dump(2) + "\n");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw std::runtime_error(to_string(cfg.kind) + ": " + e.what());
  }
  return report;
}

}  // namespace mgan::runner
