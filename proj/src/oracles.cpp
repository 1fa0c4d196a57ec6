#include "middlegan/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "middlegan/error.hpp"
#include "middlegan/rng.hpp"

namespace mgan::oracle {

namespace {

constexpr double kKlFloor = 1e-12;
constexpr double kSimplexFloor = 1e-300;

double kl_raw(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) s += p[i] * std::log(p[i] / std::max(q[i], kKlFloor));
  }
  return s;
}

double jsd_raw(const std::vector<double>& p, const std::vector<double>& q) {
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  return 0.5 * kl_raw(p, m) + 0.5 * kl_raw(q, m);
}

double objective_raw(const std::vector<double>& ps, const std::vector<double>& pt,
                     const std::vector<double>& pm) {
  return jsd_raw(ps, pm) + jsd_raw(pt, pm);
}

double log4() { return std::log(4.0); }

}  // namespace

double kl(const DensityGrid& p, const DensityGrid& q) {
  require_same_grid(p, q, "kl");
  return kl_raw(p.mass, q.mass);
}

double jsd(const DensityGrid& p, const DensityGrid& q) {
  require_same_grid(p, q, "jsd");
  return jsd_raw(p.mass, q.mass);
}

OptimalDiscriminator optimal_discriminator(const DensityGrid& p, const DensityGrid& pm) {
  require_same_grid(p, pm, "optimal_discriminator");
  OptimalDiscriminator out;
  out.value.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double denom = p.mass[i] + pm.mass[i];
    if (denom > 0.0) {
      out.value[i] = p.mass[i] / denom;
    } else {
      out.value[i] = 0.5;
      out.undefined_cells.push_back(i);
    }
  }
  return out;
}

double virtual_criterion(const DensityGrid& ps, const DensityGrid& pt, const DensityGrid& pm) {
  require_same_grid(ps, pm, "virtual_criterion");
  require_same_grid(pt, pm, "virtual_criterion");
  return -2.0 * log4() + 2.0 * jsd_raw(ps.mass, pm.mass) + 2.0 * jsd_raw(pt.mass, pm.mass);
}

double grid_value_objective(const DensityGrid& ps, const DensityGrid& pt, const DensityGrid& pm,
                            const std::vector<double>& ds, const std::vector<double>& dt) {
  require_same_grid(ps, pm, "grid_value_objective");
  require_same_grid(pt, pm, "grid_value_objective");
  if (ds.size() != pm.size() || dt.size() != pm.size()) {
    throw ShapeError("grid_value_objective: discriminator values do not match the grid");
  }
  auto term = [](double weight, double prob) { return weight > 0.0 ? weight * std::log(prob) : 0.0; };
  double v = 0.0;
  for (std::size_t i = 0; i < pm.size(); ++i) {
    v += term(ps.mass[i], ds[i]) + term(pm.mass[i], 1.0 - ds[i]);
    v += term(pt.mass[i], dt[i]) + term(pm.mass[i], 1.0 - dt[i]);
  }
  return v;
}

double centroid_objective(const DensityGrid& ps, const DensityGrid& pt, const DensityGrid& pm) {
  require_same_grid(ps, pm, "centroid_objective");
  require_same_grid(pt, pm, "centroid_objective");
  return objective_raw(ps.mass, pt.mass, pm.mass);
}

std::string to_string(CentroidMethod method) {
  return method == CentroidMethod::mixture_sweep ? "mixture_sweep" : "simplex_descent";
}

CentroidMethod centroid_method_from_string(const std::string& name) {
  if (name == "mixture_sweep") return CentroidMethod::mixture_sweep;
  if (name == "simplex_descent") return CentroidMethod::simplex_descent;
  throw InvalidArgument("unknown centroid method '" + name + "'");
}

void CentroidSolverConfig::validate() const {
  if (sweep_resolution < 11) throw InvalidArgument("centroid: sweep_resolution must be >= 11");
  if (!(tolerance > 0.0)) throw InvalidArgument("centroid: tolerance must be > 0");
  if (!(descent_rate > 0.0)) throw InvalidArgument("centroid: descent_rate must be > 0");
}

CentroidResult jsd_centroid(const DensityGrid& ps, const DensityGrid& pt,
                            const CentroidSolverConfig& cfg) {
  cfg.validate();
  require_same_grid(ps, pt, "jsd_centroid");
  const std::size_t n = ps.size();

  CentroidResult result;
  result.sweep_objective = std::numeric_limits<double>::infinity();
  std::vector<double> pm(n);
  std::vector<double> best;
  for (std::size_t i = 0; i < cfg.sweep_resolution; ++i) {
    const double alpha = static_cast<double>(i) / static_cast<double>(cfg.sweep_resolution - 1);
    for (std::size_t c = 0; c < n; ++c) pm[c] = alpha * ps.mass[c] + (1.0 - alpha) * pt.mass[c];
    const double f = objective_raw(ps.mass, pt.mass, pm);
    if (!std::isfinite(f)) {
      throw InvalidArgument("jsd_centroid: non-finite objective at sweep point " + std::to_string(i));
    }
    if (f < result.sweep_objective) {
      result.sweep_objective = f;
      result.sweep_alpha = alpha;
      best = pm;
    }
  }

  double f = result.sweep_objective;
  result.trace.push_back(f);
  if (cfg.method == CentroidMethod::simplex_descent) {
    const double max_rate = cfg.descent_rate * 1e3;
    double rate = cfg.descent_rate;
    std::vector<double> g(n), d(n), cand(n);
    for (std::size_t step = 0; step < cfg.descent_steps; ++step) {
      double g_mean = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        g[c] = 0.5 * std::log(2.0 * best[c] / (ps.mass[c] + best[c])) +
               0.5 * std::log(2.0 * best[c] / (pt.mass[c] + best[c]));
        g_mean += best[c] * g[c];
      }
      double d_max = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        d[c] = best[c] * (g[c] - g_mean);
        d_max = std::max(d_max, std::abs(d[c]));
      }
      if (!std::isfinite(d_max)) {
        throw InvalidArgument("jsd_centroid: non-finite gradient at iterate " + std::to_string(step));
      }
      if (d_max == 0.0) break;

      bool accepted = false;
      double fc = f;
      for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
        double total = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
          cand[c] = std::max(best[c] - rate * d[c], kSimplexFloor);
          total += cand[c];
        }
        for (double& v : cand) v /= total;
        fc = objective_raw(ps.mass, pt.mass, cand);
        if (!std::isfinite(fc)) {
          throw InvalidArgument("jsd_centroid: non-finite objective at iterate " + std::to_string(step));
        }
        if (fc <= f) {
          accepted = true;
        } else {
          rate *= 0.5;
        }
      }
      if (!accepted) break;
      const double improvement = f - fc;
      best.swap(cand);
      f = fc;
      result.trace.push_back(f);
      if (improvement < cfg.tolerance) break;
      rate = std::min(rate * 1.5, max_rate);
    }
  }
  result.objective = f;
  result.centroid = DensityGrid{ps.grid, std::move(best)};
  return result;
}

Theorem2Report verify_theorem2(const DensityGrid& ps, const DensityGrid& pt,
                               const CentroidSolverConfig& cfg, std::size_t random_probes,
                               std::uint64_t seed, double tolerance) {
  Theorem2Report report;
  report.centroid = jsd_centroid(ps, pt, cfg);
  const DensityGrid& star = report.centroid.centroid;
  report.criterion_at_centroid = virtual_criterion(ps, pt, star);

  const auto& trace = report.centroid.trace;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i] > trace[i - 1]) report.trace_monotone = false;
  }

  report.max_violation = -std::numeric_limits<double>::infinity();
  auto check = [&](const DensityGrid& probe, const std::string& name) {
    const double violation = report.criterion_at_centroid - virtual_criterion(ps, pt, probe);
    ++report.probes_checked;
    if (violation > report.max_violation) report.max_violation = violation;
    if (violation > tolerance && !report.failing_probe) {
      report.failing_probe = name + " beats the centroid by " + std::to_string(violation);
    }
  };

  check(ps, "source");
  check(pt, "target");
  const DensityGrid parts[] = {ps, pt};
  const double halves[] = {0.5, 0.5};
  check(mixture(parts, halves), "even mixture");
  check(DensityGrid::uniform(ps.grid), "uniform");

  Rng rng = make_rng(seed);
  std::exponential_distribution<double> expo(1.0);
  for (std::size_t k = 0; k < random_probes; ++k) {
    std::vector<double> w(ps.size());
    for (double& v : w) v = expo(rng);
    check(DensityGrid::from_weights(ps.grid, std::move(w)), "random probe " + std::to_string(k));
  }

  report.passed = report.trace_monotone && !report.failing_probe;
  return report;
}

}  // namespace mgan::oracle
