#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <utility>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "aoi/analytic.hpp"
#include "aoi/simulate.hpp"

namespace aoi::sweep {

// Service-law choice for one sweep curve: Gamma with the given shape, or the
// deterministic limit.  The curve keeps the mean service time fixed, so the
// gamma scale is mean/k.
struct ServiceChoice {
  bool deterministic = false;
  double k = 1.0;

  static ServiceChoice parse(const std::string& s) {
    ServiceChoice c;
    if (s == "det") {
      c.deterministic = true;
      return c;
    }
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad service shape: " + s + " (expected a number or \"det\")");
    }
    if (pos != s.size() || !(v > 0.0))
      throw std::invalid_argument("bad service shape: " + s + " (expected a positive number or \"det\")");
    c.k = v;
    return c;
  }

  std::string label() const {
    if (deterministic) return "det";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", k);
    return buf;
  }

  ServiceDistribution distribution(double mean_service) const {
    return deterministic ? ServiceDistribution::deterministic(mean_service)
                         : ServiceDistribution::gamma(k, mean_service / k);
  }
};

// Arrival-rate grid: either an explicit list or min/max/count with linear or
// log spacing.
struct LambdaGrid {
  std::vector<double> explicit_values;  // wins when non-empty
  double min = 0.05;
  double max = 20.0;
  int count = 30;
  bool log_spacing = true;

  std::vector<double> values() const {
    if (!explicit_values.empty()) {
      for (double v : explicit_values)
        if (!(v > 0.0)) throw std::invalid_argument("lambda values must be > 0");
      std::vector<double> v = explicit_values;
      std::sort(v.begin(), v.end());
      return v;
    }
    if (!(min > 0.0) || !(max >= min) || count < 1)
      throw std::invalid_argument("bad lambda grid (need 0 < min <= max, count >= 1)");
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(count));
    if (count == 1) {
      v.push_back(min);
      return v;
    }
    if (log_spacing) {
      const double lo = std::log(min), hi = std::log(max);
      for (int i = 0; i < count; ++i)
        v.push_back(std::exp(lo + (hi - lo) * i / (count - 1)));
    } else {
      for (int i = 0; i < count; ++i)
        v.push_back(min + (max - min) * i / (count - 1));
    }
    v.front() = min;
    v.back() = max;
    return v;
  }
};

struct SweepSpec {
  std::vector<Scheme> schemes = {Scheme::LcfsPreempt};
  std::vector<std::string> service_shapes = {"1"};  // numbers or "det"
  double mean_service = 1.0;
  LambdaGrid lambdas;
  bool with_sim = true;
  long horizon = 2'000'000;
  long warmup = 10'000;
  int batches = 20;
  std::uint64_t seed = 20250813;
  int threads = 0;  // 0: one per hardware thread

  void validate() const {
    if (schemes.empty()) throw std::invalid_argument("sweep: no schemes");
    if (service_shapes.empty()) throw std::invalid_argument("sweep: no service shapes");
    if (!(mean_service > 0.0)) throw std::invalid_argument("sweep: mean service must be > 0");
    for (const std::string& s : service_shapes) ServiceChoice::parse(s);
    lambdas.values();
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["schemes"] = nlohmann::json::array();
    for (Scheme s : schemes) j["schemes"].push_back(scheme_name(s));
    j["k"] = service_shapes;
    j["mean_service"] = mean_service;
    if (!lambdas.explicit_values.empty()) {
      j["lambda"] = {{"values", lambdas.explicit_values}};
    } else {
      j["lambda"] = {{"min", lambdas.min},
                     {"max", lambdas.max},
                     {"count", lambdas.count},
                     {"spacing", lambdas.log_spacing ? "log" : "linear"}};
    }
    j["sim"] = {{"enabled", with_sim},
                {"horizon", horizon},
                {"warmup", warmup},
                {"batches", batches},
                {"seed", seed}};
    j["threads"] = threads;
    return j;
  }

  static SweepSpec from_json(const nlohmann::json& j) {
    SweepSpec s;
    if (j.contains("schemes")) {
      s.schemes.clear();
      for (const auto& name : j.at("schemes"))
        s.schemes.push_back(scheme_from_name(name.get<std::string>()));
    }
    if (j.contains("k")) s.service_shapes = j.at("k").get<std::vector<std::string>>();
    if (j.contains("mean_service")) s.mean_service = j.at("mean_service").get<double>();
    if (j.contains("lambda")) {
      const auto& l = j.at("lambda");
      if (l.contains("values")) {
        s.lambdas.explicit_values = l.at("values").get<std::vector<double>>();
      } else {
        s.lambdas.min = l.value("min", s.lambdas.min);
        s.lambdas.max = l.value("max", s.lambdas.max);
        s.lambdas.count = l.value("count", s.lambdas.count);
        const std::string spacing = l.value("spacing", std::string("log"));
        if (spacing != "log" && spacing != "linear")
          throw std::invalid_argument("lambda spacing must be log or linear");
        s.lambdas.log_spacing = spacing == "log";
      }
    }
    if (j.contains("sim")) {
      const auto& sim = j.at("sim");
      s.with_sim = sim.value("enabled", s.with_sim);
      s.horizon = sim.value("horizon", s.horizon);
      s.warmup = sim.value("warmup", s.warmup);
      s.batches = sim.value("batches", s.batches);
      s.seed = sim.value("seed", s.seed);
    }
    if (j.contains("threads")) s.threads = j.at("threads").get<int>();
    s.validate();
    return s;
  }
};

// Curves from the figures in the writeup: gamma shapes at unit mean service,
// the preempt/no-preempt comparison at k = 2, and the deterministic limit.
// The default 30-point log grid is augmented with exact 1 and 10 so the
// reference points land on the grid.
inline SweepSpec preset(const std::string& name) {
  SweepSpec s;
  LambdaGrid g;
  std::vector<double> values = g.values();
  values.push_back(1.0);
  values.push_back(10.0);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  s.lambdas.explicit_values = values;
  if (name == "fig4") {
    s.schemes = {Scheme::LcfsPreempt};
    s.service_shapes = {"1", "2", "3", "10"};
  } else if (name == "fig5") {
    s.schemes = {Scheme::LcfsNoPreempt};
    s.service_shapes = {"1", "2", "3"};
  } else if (name == "fig6") {
    s.schemes = {Scheme::LcfsPreempt, Scheme::LcfsNoPreempt};
    s.service_shapes = {"2"};
  } else if (name == "fig7") {
    s.schemes = {Scheme::LcfsPreempt, Scheme::LcfsNoPreempt};
    s.service_shapes = {"det"};
  } else {
    throw std::invalid_argument("unknown preset: " + name +
                                " (expected fig4, fig5, fig6 or fig7)");
  }
  return s;
}

struct CsvRow {
  std::string scheme;
  std::string k;  // shape label, or "det"
  double theta = 0.0;  // gamma scale; for "det" rows, the service time itself
  double lambda = 0.0;
  std::string metric;
  double value = 0.0;
  std::optional<double> se;
  std::string source;  // analytic | sim | oracle
  std::optional<std::uint64_t> seed;
};

inline constexpr const char* kCsvHeader = "scheme,k,theta,lambda,metric,value,stderr,source,seed";

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

inline void write_csv(std::ostream& os, const std::vector<CsvRow>& rows) {
  os << kCsvHeader << '\n';
  for (const CsvRow& r : rows) {
    os << r.scheme << ',' << r.k << ',' << format_number(r.theta) << ','
       << format_number(r.lambda) << ',' << r.metric << ',' << format_number(r.value)
       << ',';
    if (r.se) os << format_number(*r.se);
    os << ',' << r.source << ',';
    if (r.seed) os << *r.seed;
    os << '\n';
  }
}

inline std::vector<CsvRow> analytic_rows(Scheme scheme, const ServiceChoice& choice,
                                         double mean_service, double lambda) {
  SystemParams params;
  params.lambda = lambda;
  params.service = choice.distribution(mean_service);
  params.scheme = scheme;
  const AnalyticReport rep = analytic::report(params);

  CsvRow base;
  base.scheme = scheme_name(scheme);
  base.k = choice.label();
  base.theta = choice.deterministic ? mean_service : mean_service / choice.k;
  base.lambda = lambda;
  base.source = "analytic";

  std::vector<CsvRow> rows;
  auto push = [&](const char* metric, double value) {
    CsvRow r = base;
    r.metric = metric;
    r.value = value;
    rows.push_back(std::move(r));
  };
  push("avg_age", rep.avg_age);
  push("avg_peak", rep.avg_peak);
  push("effective_rate", rep.effective_rate);
  push("success_prob", rep.success_prob);
  push("mean_system_time", rep.mean_system_time);
  push("mean_interdeparture", rep.mean_interdeparture);
  push("second_moment_interdeparture", rep.second_moment_interdeparture);
  push("mean_area", rep.mean_area);
  if (rep.cross_moment) push("cross_moment", *rep.cross_moment);
  return rows;
}

inline std::vector<CsvRow> sim_rows(Scheme scheme, const ServiceChoice& choice,
                                    double mean_service, double lambda,
                                    const SimReport& rep) {
  CsvRow base;
  base.scheme = scheme_name(scheme);
  base.k = choice.label();
  base.theta = choice.deterministic ? mean_service : mean_service / choice.k;
  base.lambda = lambda;
  base.source = "sim";
  base.seed = rep.seed;

  std::vector<CsvRow> rows;
  auto push = [&](const char* metric, double value, double se) {
    CsvRow r = base;
    r.metric = metric;
    r.value = value;
    if (std::isfinite(se)) r.se = se;
    rows.push_back(std::move(r));
  };
  push("avg_age", rep.avg_age, rep.avg_age_se);
  push("avg_peak", rep.avg_peak, rep.avg_peak_se);
  push("effective_rate", rep.effective_rate, rep.effective_rate_se);
  push("drop_fraction", rep.drop_fraction, rep.drop_fraction_se);
  push("mean_system_time", rep.mean_system_time, rep.mean_system_time_se);
  push("mean_interdeparture", rep.mean_interdeparture, rep.mean_interdeparture_se);
  push("second_moment_interdeparture", rep.second_moment_interdeparture,
       rep.second_moment_interdeparture_se);
  return rows;
}

struct SweepResult {
  std::vector<CsvRow> rows;
  std::vector<std::string> errors;  // one entry per failed grid point
};

// Runs every (lambda, shape, scheme) point, sim points in parallel.  Output
// order is deterministic: points sorted by (lambda, shape, scheme), analytic
// rows before sim rows at each point.
inline SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  struct Task {
    double lambda;
    ServiceChoice choice;
    std::string shape_label;
    Scheme scheme;
    std::uint64_t stream_id;
  };
  std::vector<Task> tasks;
  {
    std::uint64_t stream = 0;
    for (double lambda : spec.lambdas.values())
      for (const std::string& shape : spec.service_shapes)
        for (Scheme scheme : spec.schemes)
          tasks.push_back({lambda, ServiceChoice::parse(shape), shape, scheme, stream++});
  }
  // Shapes order numerically with the deterministic limit last.
  auto shape_key = [](const Task& t) {
    return t.choice.deterministic ? std::numeric_limits<double>::infinity() : t.choice.k;
  };
  std::stable_sort(tasks.begin(), tasks.end(), [&](const Task& a, const Task& b) {
    return std::make_pair(a.lambda, shape_key(a)) < std::make_pair(b.lambda, shape_key(b));
  });

  std::vector<std::vector<CsvRow>> results(tasks.size());
  std::vector<std::string> errors(tasks.size());

  auto run_task = [&](std::size_t i) {
    const Task& t = tasks[i];
    try {
      std::vector<CsvRow> rows = analytic_rows(t.scheme, t.choice, spec.mean_service, t.lambda);
      if (spec.with_sim) {
        SimConfig cfg;
        cfg.params.lambda = t.lambda;
        cfg.params.service = t.choice.distribution(spec.mean_service);
        cfg.params.scheme = t.scheme;
        cfg.seed = splitmix64(spec.seed ^ splitmix64(t.stream_id));
        cfg.horizon = spec.horizon;
        cfg.warmup = spec.warmup;
        cfg.batches = spec.batches;
        const SimReport rep = run(cfg);
        std::vector<CsvRow> sim =
            sim_rows(t.scheme, t.choice, spec.mean_service, t.lambda, rep);
        rows.insert(rows.end(), sim.begin(), sim.end());
      }
      results[i] = std::move(rows);
    } catch (const std::exception& e) {
      char buf[256];
      std::snprintf(buf, sizeof(buf), "point scheme=%s k=%s lambda=%.9g failed: %s",
                    scheme_name(t.scheme), t.choice.label().c_str(), t.lambda, e.what());
      errors[i] = buf;
    }
  };

  unsigned n_threads = spec.threads > 0 ? static_cast<unsigned>(spec.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(tasks.size()));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) run_task(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned w = 0; w < n_threads; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= tasks.size()) return;
          run_task(i);
        }
      });
    for (std::thread& th : pool) th.join();
  }

  SweepResult out;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    out.rows.insert(out.rows.end(), results[i].begin(), results[i].end());
    if (!errors[i].empty()) out.errors.push_back(errors[i]);
  }
  return out;
}

}  // namespace aoi::sweep
