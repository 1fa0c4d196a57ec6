#include "middlegan/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

#include "middlegan/error.hpp"

namespace mgan::runner {

namespace {

// ---------------------------------------------------------------------------
// Lexing

struct Value {
  enum class Type { integer, real, string, list };
  Type type = Type::integer;
  std::string str;
  std::vector<double> numbers;
  std::vector<std::int64_t> integers;  // valid when `integral`
  bool integral = true;
};

struct Entry {
  Value value;
  std::size_t line = 0;
  bool used = false;
};

struct Section {
  std::size_t line = 0;
  std::map<std::string, Entry> entries;
};

using Document = std::map<std::string, Section>;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

// Strips a trailing comment, ignoring '#' inside a quoted string.
std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && quoted) {
      ++i;
    } else if (line[i] == '"') {
      quoted = !quoted;
    } else if (line[i] == '#' && !quoted) {
      return line.substr(0, i);
    }
  }
  return line;
}

bool parse_number(std::string_view tok, Value& v) {
  const std::string s(tok);
  if (s.empty()) return false;
  std::size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
  const bool digits = i < s.size() && std::all_of(s.begin() + static_cast<std::ptrdiff_t>(i),
                                                  s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
  if (digits) {
    errno = 0;
    char* end = nullptr;
    const long long x = std::strtoll(s.c_str(), &end, 10);
    if (errno == ERANGE) return false;
    v.integers.push_back(x);
    v.numbers.push_back(static_cast<double>(x));
    return true;
  }
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(x)) return false;
  v.integral = false;
  v.numbers.push_back(x);
  return true;
}

Value parse_value(std::string_view text, std::size_t line) {
  text = trim(text);
  if (text.empty()) throw ConfigError("missing value", line);
  Value v;
  if (text.front() == '"') {
    v.type = Value::Type::string;
    std::size_t i = 1;
    bool closed = false;
    for (; i < text.size(); ++i) {
      if (text[i] == '\\' && i + 1 < text.size()) {
        v.str.push_back(text[++i]);
      } else if (text[i] == '"') {
        closed = true;
        break;
      } else {
        v.str.push_back(text[i]);
      }
    }
    if (!closed || !trim(text.substr(i + 1)).empty()) {
      throw ConfigError("malformed quoted string", line);
    }
    return v;
  }
  std::size_t parts = 0;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = text.find(',', start);
    const auto tok = trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                             : comma - start));
    if (!parse_number(tok, v)) {
      throw ConfigError("invalid value '" + std::string(tok) +
                            "' (expected integer, real, quoted string or comma-separated list)",
                        line);
    }
    ++parts;
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  v.type = parts > 1 ? Value::Type::list : (v.integral ? Value::Type::integer : Value::Type::real);
  return v;
}

Document parse_document(std::string_view text) {
  Document doc;
  Section* current = nullptr;
  std::string current_name;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view raw =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    const auto line = trim(strip_comment(raw));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header", lineno);
      const auto name = trim(line.substr(1, line.size() - 2));
      if (!is_identifier(name)) throw ConfigError("invalid section name", lineno);
      current_name = std::string(name);
      if (doc.count(current_name)) {
        throw ConfigError("duplicate section [" + current_name + "] (first at line " +
                              std::to_string(doc[current_name].line) + ")",
                          lineno);
      }
      current = &doc[current_name];
      current->line = lineno;
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected `key = value`", lineno);
    if (!current) throw ConfigError("entry outside of any [section]", lineno);
    const std::string key(trim(line.substr(0, eq)));
    if (!is_identifier(key)) throw ConfigError("invalid key '" + key + "'", lineno);
    if (current->entries.count(key)) {
      throw ConfigError("duplicate key " + key + " in [" + current_name + "]", lineno);
    }
    current->entries[key] = Entry{parse_value(line.substr(eq + 1), lineno), lineno, false};
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Typed access

class SectionReader {
 public:
  SectionReader(std::string name, Section* section) : name_(std::move(name)), section_(section) {}

  bool present() const { return section_ != nullptr; }
  std::size_t line() const { return section_ ? section_->line : 0; }
  bool has(const std::string& key) const { return section_ && section_->entries.count(key); }

  std::size_t line_of(const std::string& key) const {
    return has(key) ? section_->entries.at(key).line : line();
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError("[" + name_ + "] " + key + " " + msg, line_of(key));
  }

  [[noreturn]] void require(const std::string& key) const {
    throw ConfigError("missing required key " + key + " in [" + name_ + "]", line());
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    const Value* v = take(key);
    if (!v) return fallback;
    if (v->type != Value::Type::integer) fail(key, "must be an integer");
    return v->integers.front();
  }

  std::size_t count(const std::string& key, std::size_t fallback, std::size_t min) {
    const std::int64_t x = integer(key, static_cast<std::int64_t>(fallback));
    if (x < static_cast<std::int64_t>(min)) {
      fail(key, "must be >= " + std::to_string(min) + " (got " + std::to_string(x) + ")");
    }
    return static_cast<std::size_t>(x);
  }

  double real(const std::string& key, double fallback) {
    const Value* v = take(key);
    if (!v) return fallback;
    if (v->type != Value::Type::integer && v->type != Value::Type::real) fail(key, "must be a number");
    return v->numbers.front();
  }

  double real_in(const std::string& key, double fallback, double lo, double hi, bool lo_open) {
    const double x = real(key, fallback);
    if ((lo_open ? !(x > lo) : !(x >= lo)) || !(x <= hi)) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "must be in %s%g, %g] (got %g)", lo_open ? "(" : "[", lo, hi, x);
      fail(key, buf);
    }
    return x;
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const Value* v = take(key);
    if (!v) return fallback;
    if (v->type != Value::Type::string) fail(key, "must be a quoted string");
    return v->str;
  }

  std::vector<double> reals(const std::string& key, std::vector<double> fallback) {
    const Value* v = take(key);
    if (!v) return fallback;
    if (v->type == Value::Type::string) fail(key, "must be a number or list of numbers");
    return v->numbers;
  }

  std::vector<std::int64_t> integers(const std::string& key, std::vector<std::int64_t> fallback) {
    const Value* v = take(key);
    if (!v) return fallback;
    if (v->type == Value::Type::string || !v->integral) {
      fail(key, "must be an integer or list of integers");
    }
    return v->integers;
  }

  std::vector<std::size_t> counts(const std::string& key, std::vector<std::size_t> fallback,
                                  std::size_t min) {
    if (!has(key)) {
      (void)take(key);
      return fallback;
    }
    std::vector<std::size_t> out;
    for (auto x : integers(key, {})) {
      if (x < static_cast<std::int64_t>(min)) {
        fail(key, "entries must be >= " + std::to_string(min) + " (got " + std::to_string(x) + ")");
      }
      out.push_back(static_cast<std::size_t>(x));
    }
    return out;
  }

  /// Unused keys are unknown keys.
  void finish(bool strict) const {
    if (!section_ || !strict) return;
    for (const auto& [key, entry] : section_->entries) {
      if (!entry.used) throw ConfigError("unknown key " + key + " in [" + name_ + "]", entry.line);
    }
  }

  template <typename F>
  auto guarded(F&& f) const {
    try {
      return f();
    } catch (const InvalidArgument& e) {
      throw ConfigError("[" + name_ + "] " + e.what(), line());
    }
  }

 private:
  const Value* take(const std::string& key) {
    if (!has(key)) return nullptr;
    Entry& e = section_->entries.at(key);
    e.used = true;
    return &e.value;
  }

  std::string name_;
  Section* section_;
};

const std::set<std::string> kKnownSections = {"experiment", "source",   "target",
                                              "gan",        "classifier", "pseudo_label",
                                              "grid",       "centroid", "gradcheck",
                                              "identity"};

std::optional<domains::Transform> read_transform(SectionReader& r) {
  if (!r.has("rotation_degrees") && !r.has("shift")) return std::nullopt;
  domains::Transform t;
  t.rotation_degrees = r.real_in("rotation_degrees", 0.0, 0.0, 360.0, false);
  if (t.rotation_degrees == 360.0) r.fail("rotation_degrees", "must be in [0, 360) (got 360)");
  t.shift = r.reals("shift", {});
  return t;
}

domains::DomainSpec read_domain(SectionReader& r) {
  if (!r.has("family")) r.require("family");
  domains::DomainSpec spec;
  const std::string family = r.string("family", "");
  spec.family = r.guarded([&] { return domains::family_from_string(family); });
  spec.dimension = r.count("dimension", 2, 1);
  spec.class_count = r.count("class_count", 2, 1);
  switch (spec.family) {
    case domains::Family::gaussian_mixture: {
      if (!r.has("means")) r.require("means");
      const auto means = r.reals("means", {});
      if (means.size() != spec.class_count * spec.dimension) {
        r.fail("means", "must hold class_count x dimension = " +
                            std::to_string(spec.class_count * spec.dimension) + " values (got " +
                            std::to_string(means.size()) + ")");
      }
      if (r.has("covariances") && r.has("stddevs")) {
        r.fail("covariances", "conflicts with stddevs; give one of them");
      }
      const std::size_t d = spec.dimension;
      if (r.has("covariances")) {
        const auto cov = r.reals("covariances", {});
        if (cov.size() != spec.class_count * d * d) {
          r.fail("covariances", "must hold class_count x dimension^2 = " +
                                    std::to_string(spec.class_count * d * d) + " values");
        }
        for (std::size_t k = 0; k < spec.class_count; ++k) {
          domains::ClassParams p;
          p.mean.assign(means.begin() + static_cast<std::ptrdiff_t>(k * d),
                        means.begin() + static_cast<std::ptrdiff_t>((k + 1) * d));
          p.covariance.assign(cov.begin() + static_cast<std::ptrdiff_t>(k * d * d),
                              cov.begin() + static_cast<std::ptrdiff_t>((k + 1) * d * d));
          spec.classes.push_back(std::move(p));
        }
      } else {
        const auto sd = r.reals("stddevs", {1.0});
        if (sd.size() != 1 && sd.size() != spec.class_count) {
          r.fail("stddevs", "must hold one value or one per class");
        }
        for (double s : sd) {
          if (!(s > 0.0)) r.fail("stddevs", "entries must be > 0");
        }
        const auto built = domains::gaussian_classes(d, means, sd);
        spec.classes = built.classes;
      }
      break;
    }
    case domains::Family::two_moons:
      spec.scale = r.real_in("scale", 2.0, 0.0, 1e6, true);
      spec.noise = r.real_in("noise", 0.1, 0.0, 1e6, false);
      break;
    case domains::Family::ring: {
      if (!r.has("radii")) r.require("radii");
      const auto radii = r.reals("radii", {});
      if (radii.size() != spec.class_count) r.fail("radii", "must hold one radius per class");
      for (double rad : radii) {
        domains::ClassParams p;
        p.radius = rad;
        spec.classes.push_back(std::move(p));
      }
      spec.noise = r.real_in("noise", 0.1, 0.0, 1e6, false);
      break;
    }
  }
  spec.transform = read_transform(r);
  r.guarded([&] {
    spec.validate();
    return 0;
  });
  return spec;
}

// ---------------------------------------------------------------------------
// Serialisation helpers

std::string fmt_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  std::string s(buf);
  // Keep reals recognisable as reals so a round trip preserves the type.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string fmt_reals(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + fmt_real(xs[i]);
  return s;
}

template <typename T>
std::string fmt_counts(const std::vector<T>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + std::to_string(xs[i]);
  return s;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out + "\"";
}

void write_domain(std::ostream& os, const domains::DomainSpec& spec, bool with_transform) {
  os << "family = " << quote(domains::to_string(spec.family)) << '\n';
  os << "dimension = " << spec.dimension << '\n';
  os << "class_count = " << spec.class_count << '\n';
  switch (spec.family) {
    case domains::Family::gaussian_mixture: {
      std::vector<double> means, cov;
      for (const auto& c : spec.classes) {
        means.insert(means.end(), c.mean.begin(), c.mean.end());
        cov.insert(cov.end(), c.covariance.begin(), c.covariance.end());
      }
      os << "means = " << fmt_reals(means) << '\n';
      os << "covariances = " << fmt_reals(cov) << '\n';
      break;
    }
    case domains::Family::two_moons:
      os << "scale = " << fmt_real(spec.scale) << '\n';
      os << "noise = " << fmt_real(spec.noise) << '\n';
      break;
    case domains::Family::ring: {
      std::vector<double> radii;
      for (const auto& c : spec.classes) radii.push_back(c.radius);
      os << "radii = " << fmt_reals(radii) << '\n';
      os << "noise = " << fmt_real(spec.noise) << '\n';
      break;
    }
  }
  if (with_transform && spec.transform) {
    os << "rotation_degrees = " << fmt_real(spec.transform->rotation_degrees) << '\n';
    if (!spec.transform->shift.empty()) os << "shift = " << fmt_reals(spec.transform->shift) << '\n';
  }
}

std::string serialize(const ExperimentConfig& cfg, bool run_keys) {
  std::ostringstream os;
  os << "[experiment]\n";
  os << "kind = " << quote(to_string(cfg.kind)) << '\n';
  if (run_keys) {
    os << "seeds = " << fmt_counts(cfg.seeds) << '\n';
    os << "output_dir = " << quote(cfg.output_dir) << '\n';
  }
  os << "n_per_class = " << cfg.n_per_class << '\n';
  os << "n_test_per_class = " << cfg.n_test_per_class << '\n';
  if (cfg.n_fake_per_class) os << "n_fake_per_class = " << *cfg.n_fake_per_class << '\n';
  os << "density_samples = " << cfg.density_samples << '\n';

  if (cfg.source) {
    os << "\n[source]\n";
    write_domain(os, *cfg.source, true);
    os << "\n[target]\n";
    if (cfg.target_from_source) {
      os << "rotation_degrees = " << fmt_real(cfg.target_transform.rotation_degrees) << '\n';
      if (!cfg.target_transform.shift.empty()) {
        os << "shift = " << fmt_reals(cfg.target_transform.shift) << '\n';
      }
    } else {
      write_domain(os, *cfg.target, true);
    }
  }

  const auto& g = cfg.gan;
  os << "\n[gan]\n";
  os << "epochs = " << g.epochs << '\n';
  os << "batch_size = " << g.batch_size << '\n';
  os << "noise_dimension = " << g.noise.dimension << '\n';
  os << "lr_generator = " << fmt_real(g.lr_generator) << '\n';
  os << "lr_source = " << fmt_real(g.lr_source) << '\n';
  os << "lr_target = " << fmt_real(g.lr_target) << '\n';
  os << "generator_loss = " << quote(gan::to_string(g.generator_loss)) << '\n';
  os << "label_smoothing = " << fmt_real(g.label_smoothing) << '\n';
  os << "generator_hidden = " << fmt_counts(g.generator_hidden) << '\n';
  os << "discriminator_hidden = " << fmt_counts(g.discriminator_hidden) << '\n';
  os << "leaky_slope = " << fmt_real(g.leaky_slope) << '\n';
  os << "output_scale = " << fmt_real(g.output_scale) << '\n';

  const auto& c = cfg.classifier;
  os << "\n[classifier]\n";
  os << "hidden = " << fmt_counts(c.hidden) << '\n';
  os << "epochs = " << c.epochs << '\n';
  os << "batch_size = " << c.batch_size << '\n';
  os << "learning_rate = " << fmt_real(c.learning_rate) << '\n';
  os << "beta1 = " << fmt_real(c.beta1) << '\n';

  os << "\n[pseudo_label]\n";
  os << "method = " << quote(pipeline::to_string(cfg.pseudo_label.method)) << '\n';
  os << "confidence_threshold = " << fmt_real(cfg.pseudo_label.confidence_threshold) << '\n';

  os << "\n[grid]\n";
  os << "lo = " << fmt_real(cfg.grid.lo) << '\n';
  os << "hi = " << fmt_real(cfg.grid.hi) << '\n';
  os << "bins = " << cfg.grid.bins << '\n';

  const auto& ce = cfg.centroid;
  os << "\n[centroid]\n";
  os << "method = " << quote(oracle::to_string(ce.method)) << '\n';
  os << "sweep_resolution = " << ce.sweep_resolution << '\n';
  os << "descent_steps = " << ce.descent_steps << '\n';
  os << "descent_rate = " << fmt_real(ce.descent_rate) << '\n';
  os << "tolerance = " << fmt_real(ce.tolerance) << '\n';
  os << "probes = " << cfg.probes << '\n';
  os << "probe_tolerance = " << fmt_real(cfg.probe_tolerance) << '\n';

  os << "\n[gradcheck]\n";
  os << "architectures = " << cfg.gradcheck.architectures << '\n';
  os << "fd_step = " << fmt_real(cfg.gradcheck.fd_step) << '\n';
  os << "max_error = " << fmt_real(cfg.gradcheck.max_error) << '\n';
  os << "batch = " << cfg.gradcheck.batch << '\n';

  os << "\n[identity]\n";
  os << "triples = " << cfg.identity.triples << '\n';
  os << "tolerance = " << fmt_real(cfg.identity.tolerance) << '\n';
  return os.str();
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::gan_train:
      return "gan_train";
    case ExperimentKind::oracle_centroid:
      return "oracle_centroid";
    case ExperimentKind::verify_identity:
      return "verify_identity";
    case ExperimentKind::adaptation:
      return "adaptation";
    case ExperimentKind::agnosticism:
      return "agnosticism";
    case ExperimentKind::gradcheck:
      return "gradcheck";
  }
  return "gradcheck";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  for (auto k : {ExperimentKind::gan_train, ExperimentKind::oracle_centroid,
                 ExperimentKind::verify_identity, ExperimentKind::adaptation,
                 ExperimentKind::agnosticism, ExperimentKind::gradcheck}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument("unknown experiment kind '" + name + "'");
}

oracle::GridSpec GridSettings::spec(std::size_t dimension) const {
  oracle::GridSpec g;
  for (std::size_t d = 0; d < dimension; ++d) g.axes.push_back({lo, hi, bins});
  return g;
}

ExperimentConfig parse_config(std::string_view text, const ParseOptions& options) {
  Document doc = parse_document(text);
  for (const auto& [name, section] : doc) {
    if (!kKnownSections.count(name) && options.strict) {
      throw ConfigError("unknown section [" + name + "]", section.line);
    }
  }
  auto reader = [&](const std::string& name) {
    auto it = doc.find(name);
    return SectionReader(name, it == doc.end() ? nullptr : &it->second);
  };

  ExperimentConfig cfg;

  SectionReader ex = reader("experiment");
  if (ex.has("kind")) {
    const std::string kind = ex.string("kind", "");
    cfg.kind = ex.guarded([&] { return experiment_kind_from_string(kind); });
    if (options.kind && *options.kind != cfg.kind) {
      ex.fail("kind", "is " + kind + " but the command requests " + to_string(*options.kind));
    }
  } else if (options.kind) {
    cfg.kind = *options.kind;
  } else {
    ex.require("kind");
  }
  if (options.seeds) {
    (void)ex.integers("seeds", {});
    for (auto s : *options.seeds) cfg.seeds.push_back(s);
  } else {
    if (!ex.has("seeds")) ex.require("seeds");
    for (auto s : ex.integers("seeds", {})) {
      if (s < 0) ex.fail("seeds", "entries must be >= 0 (got " + std::to_string(s) + ")");
      cfg.seeds.push_back(static_cast<std::uint64_t>(s));
    }
  }
  if (cfg.seeds.empty()) ex.fail("seeds", "must not be empty");
  {
    std::set<std::uint64_t> distinct(cfg.seeds.begin(), cfg.seeds.end());
    if (distinct.size() != cfg.seeds.size()) ex.fail("seeds", "must be distinct");
  }
  cfg.output_dir = ex.string("output_dir", "out");
  if (options.output_dir) cfg.output_dir = *options.output_dir;
  cfg.n_per_class = ex.count("n_per_class", cfg.n_per_class, 1);
  cfg.n_test_per_class = ex.count("n_test_per_class", cfg.n_test_per_class, 1);
  if (ex.has("n_fake_per_class")) cfg.n_fake_per_class = ex.count("n_fake_per_class", 0, 0);
  cfg.density_samples = ex.count("density_samples", cfg.density_samples, 1);
  ex.finish(options.strict);

  SectionReader src = reader("source");
  SectionReader tgt = reader("target");
  if (src.present()) {
    cfg.source = read_domain(src);
    src.finish(options.strict);
    if (tgt.has("family")) {
      cfg.target_from_source = false;
      cfg.target = read_domain(tgt);
      if (cfg.target->dimension != cfg.source->dimension ||
          cfg.target->class_count != cfg.source->class_count) {
        throw ConfigError("[target] must match [source] dimension and class_count", tgt.line());
      }
    } else {
      const std::string preset = tgt.string("preset", "");
      double rotation = 0.0;
      if (!preset.empty()) {
        if (tgt.has("rotation_degrees")) tgt.fail("preset", "conflicts with rotation_degrees");
        if (preset == "none") rotation = 0.0;
        else if (preset == "mild") rotation = 30.0;
        else if (preset == "severe") rotation = 180.0;
        else tgt.fail("preset", "must be \"none\", \"mild\" or \"severe\" (got \"" + preset + "\")");
      }
      cfg.target_transform = read_transform(tgt).value_or(domains::Transform{});
      if (!preset.empty()) cfg.target_transform.rotation_degrees = rotation;
      domains::DomainSpec t = *cfg.source;
      t.transform = cfg.target_transform;
      tgt.guarded([&] {
        t.validate();
        return 0;
      });
      cfg.target = std::move(t);
    }
    tgt.finish(options.strict);
  } else {
    if (cfg.kind != ExperimentKind::gradcheck) {
      throw ConfigError("missing required section [source] for kind " + to_string(cfg.kind), 0);
    }
    if (tgt.present()) throw ConfigError("[target] given without [source]", tgt.line());
  }
  if (cfg.kind == ExperimentKind::agnosticism && !cfg.target_from_source) {
    throw ConfigError("agnosticism requires [target] to be a rotation of [source]", tgt.line());
  }
  if (cfg.kind == ExperimentKind::agnosticism && !cfg.target_transform.shift.empty()) {
    throw ConfigError("[target] shift is not supported for agnosticism (rotation only)",
                      tgt.line_of("shift"));
  }

  SectionReader gr = reader("gan");
  auto& g = cfg.gan;
  g.epochs = gr.count("epochs", g.epochs, 1);
  g.batch_size = gr.count("batch_size", g.batch_size, 2);
  g.noise.dimension = gr.count("noise_dimension", g.noise.dimension, 1);
  g.lr_generator = gr.real_in("lr_generator", g.lr_generator, 0.0, 1.0, true);
  g.lr_source = gr.real_in("lr_source", g.lr_source, 0.0, 1.0, true);
  g.lr_target = gr.real_in("lr_target", g.lr_target, 0.0, 1.0, true);
  {
    const std::string loss = gr.string("generator_loss", gan::to_string(g.generator_loss));
    g.generator_loss = gr.guarded([&] { return gan::generator_loss_from_string(loss); });
  }
  g.label_smoothing = gr.real_in("label_smoothing", g.label_smoothing, 0.0, 0.2, false);
  g.generator_hidden = gr.counts("generator_hidden", g.generator_hidden, 1);
  g.discriminator_hidden = gr.counts("discriminator_hidden", g.discriminator_hidden, 1);
  g.leaky_slope = gr.real_in("leaky_slope", g.leaky_slope, 0.0, 1.0, false);
  g.output_scale = gr.real_in("output_scale", g.output_scale, 0.0, 1e6, false);
  gr.finish(options.strict);

  SectionReader cr = reader("classifier");
  auto& c = cfg.classifier;
  c.hidden = cr.counts("hidden", c.hidden, 1);
  c.epochs = cr.count("epochs", c.epochs, 1);
  c.batch_size = cr.count("batch_size", c.batch_size, 1);
  c.learning_rate = cr.real_in("learning_rate", c.learning_rate, 0.0, 1.0, true);
  c.beta1 = cr.real_in("beta1", c.beta1, 0.0, 0.999999, false);
  cr.finish(options.strict);

  SectionReader pr = reader("pseudo_label");
  {
    const std::string method = pr.string("method", pipeline::to_string(cfg.pseudo_label.method));
    cfg.pseudo_label.method =
        pr.guarded([&] { return pipeline::pseudo_label_method_from_string(method); });
  }
  cfg.pseudo_label.confidence_threshold =
      pr.real_in("confidence_threshold", cfg.pseudo_label.confidence_threshold, 0.0, 1.0, false);
  cfg.pseudo_label.classifier = cfg.classifier;
  pr.finish(options.strict);

  SectionReader gd = reader("grid");
  cfg.grid.lo = gd.real("lo", cfg.grid.lo);
  cfg.grid.hi = gd.real("hi", cfg.grid.hi);
  if (!(cfg.grid.hi > cfg.grid.lo)) gd.fail("hi", "must be greater than lo");
  const std::size_t dim = cfg.source ? cfg.source->dimension : 1;
  cfg.grid.bins = gd.count("bins", dim == 1 ? 241 : 61, 1);
  gd.finish(options.strict);

  SectionReader ce = reader("centroid");
  {
    const std::string method = ce.string("method", oracle::to_string(cfg.centroid.method));
    cfg.centroid.method = ce.guarded([&] { return oracle::centroid_method_from_string(method); });
  }
  cfg.centroid.sweep_resolution = ce.count("sweep_resolution", cfg.centroid.sweep_resolution, 11);
  cfg.centroid.descent_steps = ce.count("descent_steps", cfg.centroid.descent_steps, 0);
  cfg.centroid.descent_rate = ce.real_in("descent_rate", cfg.centroid.descent_rate, 0.0, 1e6, true);
  cfg.centroid.tolerance = ce.real_in("tolerance", cfg.centroid.tolerance, 0.0, 1.0, true);
  cfg.probes = ce.count("probes", cfg.probes, 0);
  cfg.probe_tolerance = ce.real_in("probe_tolerance", cfg.probe_tolerance, 0.0, 1.0, false);
  ce.finish(options.strict);

  SectionReader gc = reader("gradcheck");
  cfg.gradcheck.architectures = gc.count("architectures", cfg.gradcheck.architectures, 1);
  cfg.gradcheck.fd_step = gc.real_in("fd_step", cfg.gradcheck.fd_step, 0.0, 1.0, true);
  cfg.gradcheck.max_error = gc.real_in("max_error", cfg.gradcheck.max_error, 0.0, 1.0, true);
  cfg.gradcheck.batch = gc.count("batch", cfg.gradcheck.batch, 1);
  gc.finish(options.strict);

  SectionReader id = reader("identity");
  cfg.identity.triples = id.count("triples", cfg.identity.triples, 1);
  cfg.identity.tolerance = id.real_in("tolerance", cfg.identity.tolerance, 0.0, 1.0, true);
  id.finish(options.strict);

  return cfg;
}

std::string serialize_config(const ExperimentConfig& cfg) { return serialize(cfg, true); }

std::string config_digest(const ExperimentConfig& cfg) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(serialize(cfg, false))));
  return buf;
}

std::string builtin_config(ExperimentKind kind) {
  const std::string gauss_1d =
      "[source]\n"
      "family = \"gaussian_mixture\"\n"
      "dimension = 1\n"
      "class_count = 1\n"
      "means = -2\n"
      "stddevs = 1\n"
      "\n"
      "[target]\n"
      "rotation_degrees = 180   # N(+2, 1)\n";
  switch (kind) {
    case ExperimentKind::gan_train:
      return "[experiment]\nkind = \"gan_train\"\nseeds = 1\noutput_dir = \"out/gan_train\"\n"
             "n_per_class = 2000\n\n" +
             gauss_1d + "\n[gan]\nepochs = 3000\n";
    case ExperimentKind::oracle_centroid:
      return "[experiment]\nkind = \"oracle_centroid\"\nseeds = 1\n"
             "output_dir = \"out/centroid\"\n\n" +
             gauss_1d;
    case ExperimentKind::verify_identity:
      return "[experiment]\nkind = \"verify_identity\"\nseeds = 1\n"
             "output_dir = \"out/verify\"\n\n" +
             gauss_1d;
    case ExperimentKind::adaptation:
      return "[experiment]\n"
             "kind = \"adaptation\"\n"
             "seeds = 1\n"
             "output_dir = \"out/adapt\"\n"
             "n_per_class = 500\n"
             "\n"
             "[source]\n"
             "family = \"two_moons\"\n"
             "scale = 2.0\n"
             "noise = 0.1\n"
             "\n"
             "[target]\n"
             "preset = \"mild\"   # 30 degrees\n"
             "\n"
             "[classifier]\n"
             "epochs = 30\n"
             "learning_rate = 0.002\n";
    case ExperimentKind::agnosticism:
      return "[experiment]\n"
             "kind = \"agnosticism\"\n"
             "seeds = 1\n"
             "output_dir = \"out/agnostic\"\n"
             "n_per_class = 500\n"
             "n_test_per_class = 500\n"
             "\n"
             "[source]\n"
             "family = \"gaussian_mixture\"\n"
             "dimension = 2\n"
             "class_count = 2\n"
             "means = 2, 2, 2, -2\n"
             "stddevs = 0.75\n"
             "\n"
             "[target]\n"
             "preset = \"severe\"   # 180 degrees\n";
    case ExperimentKind::gradcheck:
      return "[experiment]\nkind = \"gradcheck\"\nseeds = 1\noutput_dir = \"out/gradcheck\"\n";
  }
  return {};
}

}  // namespace mgan::runner
