// mgan: command-line front end for the MiddleGAN experiments.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "middlegan/config.hpp"
#include "middlegan/error.hpp"
#include "middlegan/experiment.hpp"
#include "middlegan/svg.hpp"

namespace {

using mgan::runner::ExperimentKind;

enum Exit { ok = 0, verification_failed = 1, config_error = 2, runtime_error = 3 };

struct CommonFlags {
  std::string config_path;
  std::string out;
  std::string seeds;
  bool strict = true;
  bool dump_config = false;
};

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw mgan::ConfigError("--seed: '" + item + "' is not a non-negative integer", 0);
    }
    out.push_back(v);
  }
  if (out.empty()) throw mgan::ConfigError("--seed: empty list", 0);
  return out;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw mgan::ConfigError("cannot read config file " + path, 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_kind(ExperimentKind kind, const CommonFlags& f) {
  mgan::runner::ParseOptions opts;
  opts.strict = f.strict;
  opts.kind = kind;
  if (!f.seeds.empty()) opts.seeds = parse_seeds(f.seeds);
  if (!f.out.empty()) opts.output_dir = f.out;
  const std::string text =
      f.config_path.empty() ? mgan::runner::builtin_config(kind) : read_text(f.config_path);
  const auto cfg = mgan::runner::parse_config(text, opts);
  if (f.dump_config) {
    std::cout << mgan::runner::serialize_config(cfg);
    return ok;
  }

  const auto report = mgan::runner::run_experiment(cfg);
  std::printf("%s  digest %s  seeds %zu  -> %s/report.json\n", to_string(kind).c_str(),
              report.config_digest.c_str(), report.per_seed.size(), cfg.output_dir.c_str());
  std::size_t shown = 0;
  for (const auto& [path, stats] : report.aggregate.items()) {
    if (++shown > 24) {
      std::printf("  ... %zu more metrics in report.json\n", report.aggregate.size() - 24);
      break;
    }
    std::printf("  %-48s median %-12.6g min %-12.6g max %.6g\n", path.c_str(),
                stats["median"].get<double>(), stats["min"].get<double>(),
                stats["max"].get<double>());
  }
  for (const auto& f : report.failures) std::printf("  FAILED %s\n", f.c_str());
  std::printf("%s\n", report.passed ? "passed" : "verification failed");
  return report.passed ? ok : verification_failed;
}

int run_plot(const std::vector<std::string>& inputs, const std::string& out,
             const std::string& title) {
  std::vector<mgan::domains::LabeledDataset> sets;
  mgan::runner::ScatterStyle style;
  style.title = title;
  for (const auto& path : inputs) {
    std::ifstream in(path);
    if (!in) throw mgan::ConfigError("cannot read " + path, 0);
    sets.push_back(mgan::domains::read_csv(in));
    style.labels.push_back(path);
  }
  const std::filesystem::path target = std::filesystem::path(out.empty() ? "." : out) / "scatter.svg";
  mgan::runner::emit_scatter_svg(sets, style, target);
  std::printf("wrote %s\n", target.string().c_str());
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MiddleGAN desk-scale experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", mgan::runner::kToolVersion);

  const std::pair<const char*, ExperimentKind> commands[] = {
      {"train", ExperimentKind::gan_train},
      {"centroid", ExperimentKind::oracle_centroid},
      {"verify", ExperimentKind::verify_identity},
      {"adapt", ExperimentKind::adaptation},
      {"agnostic", ExperimentKind::agnosticism},
      {"gradcheck", ExperimentKind::gradcheck},
  };
  const char* help[] = {
      "train one MiddleGAN per class and compare it with the JSD centroid",
      "solve for the JSD centroid of the source and target densities",
      "check the optimal-discriminator identity and certify the centroid",
      "source-only vs MiddleGAN-augmented classifier on the target",
      "rotate generated samples and compare classifier accuracies",
      "finite-difference gradient check over random architectures",
  };

  std::vector<CommonFlags> flags(std::size(commands));
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < std::size(commands); ++i) {
    auto* sub = app.add_subcommand(commands[i].first, help[i]);
    auto& f = flags[i];
    sub->add_option("--config", f.config_path, "config file (built-in example when omitted)");
    sub->add_option("--out", f.out, "output directory (overrides the config)");
    sub->add_option("--seed", f.seeds, "comma-separated seeds (overrides the config)");
    sub->add_flag("--strict,!--no-strict", f.strict, "reject unknown sections and keys (default on)");
    sub->add_flag("--dump-config", f.dump_config, "print the canonical config and exit");
    subs.push_back(sub);
  }

  std::vector<std::string> plot_inputs;
  std::string plot_out, plot_title;
  auto* plot = app.add_subcommand("plot", "scatter plot of 2-D CSV datasets as scatter.svg");
  plot->add_option("--input", plot_inputs, "dataset CSV files")->required();
  plot->add_option("--out", plot_out, "output directory");
  plot->add_option("--title", plot_title, "plot title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }

  try {
    if (plot->parsed()) return run_plot(plot_inputs, plot_out, plot_title);
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (subs[i]->parsed()) return run_kind(commands[i].second, flags[i]);
    }
  } catch (const mgan::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return config_error;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return runtime_error;
  }
  return runtime_error;
}
