// aoi: closed-form and simulated age-of-information metrics for a single
// LCFS status-update queue with gamma or deterministic service.
//
// Subcommands:
//   analytic   closed-form metrics at given parameter points (CSV on stdout)
//   simulate   one seeded discrete-event run (CSV on stdout)
//   sweep      analytic + simulated curves over a lambda grid
//   validate   self-check table (chain, quadrature, transform, Monte Carlo)
//
// Exit codes: 0 success, 1 failed checks or failed sweep points, 2 bad usage.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "aoi/analytic.hpp"
#include "aoi/oracle.hpp"
#include "aoi/simulate.hpp"
#include "aoi/sweep.hpp"
#include "aoi/validate.hpp"

namespace {

struct ServiceFlags {
  std::optional<double> k;
  std::optional<double> theta;
  std::optional<double> mean_service;
  bool det = false;
  std::optional<double> mu;
  std::optional<double> det_service;

  aoi::ServiceDistribution resolve() const {
    if (det || mu || det_service) {
      if (k || theta || mean_service)
        throw CLI::ValidationError("service", "gamma flags cannot be combined with deterministic flags");
      if (mu && det_service)
        throw CLI::ValidationError("service", "give either --mu or --det-service, not both");
      double d = 1.0;
      if (mu) {
        if (!(*mu > 0.0)) throw CLI::ValidationError("--mu", "must be > 0");
        d = 1.0 / *mu;
      } else if (det_service) {
        d = *det_service;
      }
      return aoi::ServiceDistribution::deterministic(d);
    }
    if (!k) throw CLI::ValidationError("service", "need --k with --theta or --mean-service (or --det)");
    if (theta && mean_service)
      throw CLI::ValidationError("service", "give either --theta or --mean-service, not both");
    const double scale = theta ? *theta : (mean_service ? *mean_service / *k : 1.0 / *k);
    return aoi::ServiceDistribution::gamma(*k, scale);
  }
};

void add_service_flags(CLI::App* cmd, ServiceFlags& f) {
  cmd->add_option("--k", f.k, "gamma shape (number of service stages)");
  cmd->add_option("--theta", f.theta, "gamma scale");
  cmd->add_option("--mean-service", f.mean_service, "gamma mean; scale becomes mean/k");
  cmd->add_flag("--det", f.det, "deterministic service");
  cmd->add_option("--mu", f.mu, "deterministic service rate (service time 1/mu)");
  cmd->add_option("--det-service", f.det_service, "deterministic service time");
}

std::vector<aoi::Scheme> parse_schemes(const std::string& s) {
  if (s == "both") return {aoi::Scheme::LcfsPreempt, aoi::Scheme::LcfsNoPreempt};
  return {aoi::scheme_from_name(s)};
}

void emit(const std::string& out_path, const std::vector<aoi::sweep::CsvRow>& rows) {
  if (out_path.empty()) {
    aoi::sweep::write_csv(std::cout, rows);
    return;
  }
  std::ofstream f(out_path);
  if (!f) throw std::runtime_error("cannot open output file: " + out_path);
  aoi::sweep::write_csv(f, rows);
}

aoi::sweep::ServiceChoice choice_of(const aoi::ServiceDistribution& svc) {
  aoi::sweep::ServiceChoice c;
  if (svc.is_deterministic()) {
    c.deterministic = true;
  } else {
    c.k = svc.shape();
  }
  return c;
}

int cmd_analytic(const ServiceFlags& service, const std::string& scheme,
                 const std::vector<double>& lambdas, const std::string& out_path) {
  const aoi::ServiceDistribution svc = service.resolve();
  const double mean_service = svc.mean();
  std::vector<aoi::sweep::CsvRow> rows;
  for (aoi::Scheme sch : parse_schemes(scheme))
    for (double lambda : lambdas) {
      auto point = aoi::sweep::analytic_rows(sch, choice_of(svc), mean_service, lambda);
      rows.insert(rows.end(), point.begin(), point.end());
    }
  emit(out_path, rows);
  return 0;
}

int cmd_simulate(const ServiceFlags& service, const std::string& scheme, double lambda,
                 long horizon, long warmup, int batches, std::uint64_t seed,
                 const std::string& trace_path, const std::string& out_path) {
  aoi::SimConfig cfg;
  cfg.params.lambda = lambda;
  cfg.params.service = service.resolve();
  cfg.params.scheme = aoi::scheme_from_name(scheme);
  cfg.seed = seed;
  cfg.horizon = horizon;
  cfg.warmup = warmup;
  cfg.batches = batches;

  std::ofstream trace_file;
  aoi::TraceSink sink;
  if (!trace_path.empty()) {
    trace_file.open(trace_path);
    if (!trace_file) throw std::runtime_error("cannot open trace file: " + trace_path);
    trace_file << "time,event,gen_time\n";
    sink = [&trace_file](const aoi::TraceEvent& e) {
      const char* kind = e.kind == aoi::SimEventKind::Arrival    ? "arrival"
                         : e.kind == aoi::SimEventKind::Delivery ? "delivery"
                                                                 : "drop";
      trace_file << aoi::sweep::format_number(e.time) << ',' << kind << ','
                 << aoi::sweep::format_number(e.gen_time) << '\n';
    };
  }

  const aoi::SimReport rep = aoi::run(cfg, nullptr, sink);
  std::vector<aoi::sweep::CsvRow> rows = aoi::sweep::sim_rows(
      cfg.params.scheme, choice_of(cfg.params.service), cfg.params.service.mean(),
      lambda, rep);
  emit(out_path, rows);
  if (!rep.reliable)
    std::cerr << "warning: run too short for stable batch-means errors "
                 "(window deliveries: " << rep.window_deliveries << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Age-of-information metrics for an LCFS status-update queue"};
  app.require_subcommand(1);

  // analytic ---------------------------------------------------------------
  auto* analytic_cmd = app.add_subcommand("analytic", "closed-form metrics at parameter points");
  ServiceFlags an_service;
  std::string an_scheme;
  std::vector<double> an_lambdas;
  std::string an_out;
  analytic_cmd->add_option("--scheme", an_scheme, "preempt | nopreempt | both")->required();
  add_service_flags(analytic_cmd, an_service);
  analytic_cmd->add_option("--lambda", an_lambdas, "arrival rate(s)")->required()->expected(-1);
  analytic_cmd->add_option("--out", an_out, "write CSV here instead of stdout");

  // simulate ---------------------------------------------------------------
  auto* sim_cmd = app.add_subcommand("simulate", "one seeded discrete-event run");
  ServiceFlags sim_service;
  std::string sim_scheme;
  double sim_lambda = 1.0;
  long sim_horizon = 2'000'000, sim_warmup = 10'000;
  int sim_batches = 20;
  std::uint64_t sim_seed = 1;
  std::string sim_trace, sim_out;
  sim_cmd->add_option("--scheme", sim_scheme, "preempt | nopreempt")->required();
  add_service_flags(sim_cmd, sim_service);
  sim_cmd->add_option("--lambda", sim_lambda, "arrival rate")->required();
  sim_cmd->add_option("--horizon", sim_horizon, "packets to generate");
  sim_cmd->add_option("--warmup", sim_warmup, "delivered packets to discard");
  sim_cmd->add_option("--batches", sim_batches, "batch count for standard errors");
  sim_cmd->add_option("--seed", sim_seed, "RNG seed")->envname("AOI_SEED");
  sim_cmd->add_option("--trace", sim_trace, "write an event trace CSV here");
  sim_cmd->add_option("--out", sim_out, "write CSV here instead of stdout");

  // sweep --------------------------------------------------------------------
  auto* sweep_cmd = app.add_subcommand("sweep", "curves over a lambda grid");
  std::string sw_preset, sw_config, sw_out;
  bool sw_dump = false;
  std::string sw_schemes;
  std::vector<std::string> sw_shapes;
  std::vector<double> sw_lambdas;
  double sw_mean_service = -1.0;
  long sw_horizon = -1, sw_warmup = -1;
  int sw_batches = -1, sw_threads = -1;
  std::uint64_t sw_seed = 0;
  bool sw_no_sim = false;
  sweep_cmd->add_option("--preset", sw_preset, "fig4 | fig5 | fig6 | fig7");
  sweep_cmd->add_option("--config", sw_config, "JSON sweep spec (flags override it)");
  sweep_cmd->add_flag("--dump-config", sw_dump, "print the effective spec as JSON and exit");
  sweep_cmd->add_option("--scheme", sw_schemes, "preempt | nopreempt | both");
  sweep_cmd->add_option("--k", sw_shapes, "service shapes (numbers or det)")->expected(-1);
  sweep_cmd->add_option("--lambda", sw_lambdas, "explicit lambda values")->expected(-1);
  sweep_cmd->add_option("--mean-service", sw_mean_service, "mean service time");
  sweep_cmd->add_option("--horizon", sw_horizon, "sim packets per point");
  sweep_cmd->add_option("--warmup", sw_warmup, "sim warmup deliveries");
  sweep_cmd->add_option("--batches", sw_batches, "sim batch count");
  auto* sw_seed_opt = sweep_cmd->add_option("--seed", sw_seed, "base RNG seed")->envname("AOI_SEED");
  sweep_cmd->add_option("--threads", sw_threads, "worker threads (0 = all cores)");
  sweep_cmd->add_flag("--no-sim", sw_no_sim, "analytic rows only");
  sweep_cmd->add_option("--out", sw_out, "write CSV here instead of stdout");

  // validate -----------------------------------------------------------------
  auto* val_cmd = app.add_subcommand("validate", "run the self-check table");
  bool val_quick = false;
  std::uint64_t val_seed = aoi::validate::Options{}.seed;
  int val_kmax = 20;
  std::string val_csv;
  val_cmd->add_flag("--quick", val_quick, "smaller grids and sample counts");
  val_cmd->add_option("--seed", val_seed, "RNG seed for the Monte Carlo checks")->envname("AOI_SEED");
  val_cmd->add_option("--k-max", val_kmax, "largest service-stage count checked");
  val_cmd->add_option("--csv", val_csv, "also write the table as CSV rows here");

  try {
    app.parse(argc, argv);

    if (analytic_cmd->parsed())
      return cmd_analytic(an_service, an_scheme, an_lambdas, an_out);

    if (sim_cmd->parsed())
      return cmd_simulate(sim_service, sim_scheme, sim_lambda, sim_horizon, sim_warmup,
                          sim_batches, sim_seed, sim_trace, sim_out);

    if (sweep_cmd->parsed()) {
      aoi::sweep::SweepSpec spec;
      if (!sw_preset.empty()) spec = aoi::sweep::preset(sw_preset);
      if (!sw_config.empty()) {
        if (!sw_preset.empty())
          throw CLI::ValidationError("sweep", "give either --preset or --config, not both");
        std::ifstream f(sw_config);
        if (!f) throw std::runtime_error("cannot open config file: " + sw_config);
        nlohmann::json j;
        f >> j;
        spec = aoi::sweep::SweepSpec::from_json(j);
      }
      if (!sw_schemes.empty()) spec.schemes = parse_schemes(sw_schemes);
      if (!sw_shapes.empty()) spec.service_shapes = sw_shapes;
      if (!sw_lambdas.empty()) {
        spec.lambdas = {};
        spec.lambdas.explicit_values = sw_lambdas;
      }
      if (sw_mean_service > 0.0) spec.mean_service = sw_mean_service;
      if (sw_horizon >= 0) spec.horizon = sw_horizon;
      if (sw_warmup >= 0) spec.warmup = sw_warmup;
      if (sw_batches >= 0) spec.batches = sw_batches;
      if (sw_threads >= 0) spec.threads = sw_threads;
      if (!sw_seed_opt->empty()) spec.seed = sw_seed;
      if (sw_no_sim) spec.with_sim = false;
      spec.validate();

      if (sw_dump) {
        std::cout << spec.to_json().dump(2) << '\n';
        return 0;
      }
      const aoi::sweep::SweepResult result = aoi::sweep::run_sweep(spec);
      emit(sw_out, result.rows);
      for (const std::string& e : result.errors) std::cerr << e << '\n';
      return result.errors.empty() ? 0 : 1;
    }

    if (val_cmd->parsed()) {
      aoi::validate::Options opt;
      opt.quick = val_quick;
      opt.seed = val_seed;
      opt.k_max = val_kmax;
      const std::vector<aoi::validate::CheckRow> rows = aoi::validate::run_all(opt);
      aoi::validate::print_table(std::cout, rows);
      if (!val_csv.empty()) {
        std::vector<aoi::sweep::CsvRow> csv;
        for (const auto& r : rows) {
          aoi::sweep::CsvRow row;
          row.metric = r.name;
          row.value = r.observed;
          row.source = "oracle";
          row.seed = opt.seed;
          csv.push_back(std::move(row));
        }
        std::ofstream f(val_csv);
        if (!f) throw std::runtime_error("cannot open output file: " + val_csv);
        aoi::sweep::write_csv(f, csv);
      }
      return aoi::validate::all_pass(rows) ? 0 : 1;
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // --help exits cleanly; anything else is a usage error
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
