#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "aoi/analytic.hpp"
#include "aoi/oracle.hpp"
#include "aoi/simulate.hpp"
#include "aoi/stats.hpp"

namespace aoi::validate {

struct CheckRow {
  std::string name;
  double expected = 0.0;
  double observed = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string note;
};

struct Options {
  bool quick = false;  // smaller grids and sample counts, same tolerances
  std::uint64_t seed = 20250813;
  int k_max = 20;
};

namespace detail {

inline double rel_err(double got, double want) {
  const double denom = std::max(std::abs(want), 1e-300);
  return std::abs(got - want) / denom;
}

inline CheckRow bounded(std::string name, double observed, double tolerance,
                        std::string note = {}) {
  CheckRow r;
  r.name = std::move(name);
  r.expected = 0.0;
  r.observed = observed;
  r.tolerance = tolerance;
  r.pass = std::isfinite(observed) && std::abs(observed) <= tolerance;
  r.note = std::move(note);
  return r;
}

inline CheckRow at_least(std::string name, double observed, double threshold,
                         std::string note = {}) {
  CheckRow r;
  r.name = std::move(name);
  r.expected = threshold;
  r.observed = observed;
  r.tolerance = threshold;
  r.pass = std::isfinite(observed) && observed >= threshold;
  r.note = std::move(note);
  return r;
}

inline const std::vector<double>& lambda_grid() {
  static const std::vector<double> g = {0.1, 0.5, 1.0, 2.0, 5.0, 10.0};
  return g;
}

}  // namespace detail

// The full cross-check suite: chain vs closed forms, quadrature vs closed
// forms, transform derivatives vs moment formulas, and Monte Carlo checks of
// the conditioning identities and the residual-interarrival law.
inline std::vector<CheckRow> run_all(const Options& opt = {}) {
  using detail::bounded;
  using detail::rel_err;
  std::vector<CheckRow> rows;
  const int k_max = opt.quick ? std::min(opt.k_max, 10) : opt.k_max;
  const auto& lambdas = detail::lambda_grid();

  // Chain route vs closed forms.
  {
    double worst_pi = 0.0, worst_rate = 0.0, worst_rowsum = 0.0;
    for (int k = 1; k <= k_max; ++k) {
      const double theta = 1.0 / k;
      for (double lambda : {0.1, 1.0, 10.0}) {
        const auto m = oracle::build_uniformized_chain(k, lambda, theta);
        for (int i = 0; i < m.size(); ++i)
          worst_rowsum = std::max(worst_rowsum, std::abs(m.prob.row(i).sum() - 1.0));
        const Eigen::VectorXd pi = oracle::steady_state(m);
        worst_pi = std::max(worst_pi,
                            std::abs(pi(1) - oracle::pi1_closed_form(k, lambda, theta)));
        const double rate = (lambda + 1.0 / theta) * pi(1);
        worst_rate = std::max(
            worst_rate,
            rel_err(rate, analytic::effective_rate_nopreempt(k, theta, lambda)));
      }
    }
    rows.push_back(bounded("chain_row_stochastic", worst_rowsum, 1e-13));
    rows.push_back(bounded("chain_pi1_vs_closed_form", worst_pi, 1e-10));
    rows.push_back(bounded("chain_effective_rate", worst_rate, 1e-10));
  }

  // Quadrature vs the closed-form success probability (integer and
  // fractional shapes).
  {
    double worst = 0.0;
    std::vector<double> shapes = {0.5, 1.0, 2.0, 2.5, 3.0, 5.0, 10.0};
    for (double k : shapes) {
      const double theta = 1.0 / k;
      for (double lambda : lambdas)
        worst = std::max(worst,
                         std::abs(oracle::success_prob_quadrature(k, theta, lambda) -
                                  analytic::success_prob(k, theta, lambda)));
    }
    rows.push_back(bounded("success_prob_quadrature", worst, 1e-9));
  }

  // Gamma density normalization.
  {
    double worst = 0.0;
    for (auto [k, theta] : {std::pair{1.0, 1.0}, {2.0, 0.5}, {0.5, 2.0}, {3.5, 0.4}}) {
      const ServiceDistribution d = ServiceDistribution::gamma(k, theta);
      worst = std::max(worst,
                       std::abs(oracle::integrate_to_inf([&](double s) { return d.pdf(s); }) - 1.0));
    }
    rows.push_back(bounded("pdf_normalization", worst, 1e-9));
  }

  // Summation route vs the closed-form cross moment and system time.
  {
    double worst_cross = 0.0, worst_t = 0.0;
    for (int k = 1; k <= k_max; ++k) {
      const double theta = 1.0 / k;
      for (double lambda : lambdas) {
        double cross = 0.0, t_mean = 0.0;
        for (int j = 0; j <= k; ++j) {
          const double pj = analytic::psi_prob(j, k, theta, lambda);
          const double yj = analytic::cond_interdeparture_np(j, k, theta, lambda);
          double t_given_j = 0.0;
          for (int l = 0; l <= k; ++l)
            t_given_j += analytic::psi_prob(l, k, theta, lambda) *
                         analytic::cond_system_time_np(j, l, k, theta, lambda);
          cross += pj * t_given_j * yj;
          t_mean += pj * t_given_j;
        }
        const auto m = analytic::nopreempt_moments(k, theta, lambda);
        worst_cross = std::max(worst_cross, rel_err(cross, m.cross_moment));
        worst_t = std::max(worst_t, rel_err(t_mean, m.mean_system_time));
      }
    }
    rows.push_back(bounded("cross_moment_sum_vs_closed", worst_cross, 1e-10));
    rows.push_back(bounded("system_time_sum_vs_closed", worst_t, 1e-10));
  }

  // Two-route identities inside the closed forms.
  {
    double worst_np = 0.0, worst_peak_np = 0.0, worst_p = 0.0, worst_peak_p = 0.0;
    for (int k = 1; k <= k_max; ++k) {
      const double theta = 1.0 / k;
      for (double lambda : lambdas) {
        const auto np = analytic::nopreempt_report(k, theta, lambda);
        worst_np = std::max(worst_np,
                            rel_err(np.effective_rate * np.mean_area, np.avg_age));
        worst_peak_np = std::max(
            worst_peak_np,
            rel_err(np.mean_system_time + np.mean_interdeparture, np.avg_peak));
        const auto p = analytic::preempt_report(k, theta, lambda);
        worst_p = std::max(worst_p, rel_err(p.effective_rate * p.mean_area, p.avg_age));
        worst_peak_p = std::max(
            worst_peak_p,
            rel_err(p.mean_system_time + p.mean_interdeparture, p.avg_peak));
      }
    }
    rows.push_back(bounded("age_nopreempt_two_routes", worst_np, 1e-12));
    rows.push_back(bounded("peak_nopreempt_identity", worst_peak_np, 1e-12));
    rows.push_back(bounded("age_preempt_two_routes", worst_p, 1e-12));
    rows.push_back(bounded("peak_preempt_identity", worst_peak_p, 1e-12));
  }

  // Transform derivatives vs moment formulas.
  {
    double worst_mean = 0.0, worst_second = 0.0, worst_wait = 0.0;
    for (auto [k, theta] : {std::pair{1.0, 1.0}, {2.0, 0.5}, {3.0, 1.0 / 3.0}}) {
      for (double lambda : {0.5, 1.0, 2.0}) {
        auto phi = [&](double s) {
          return analytic::mgf_interdeparture_preempt(s, k, theta, lambda);
        };
        const auto m = analytic::interdeparture_moments_preempt(k, theta, lambda);
        worst_mean = std::max(worst_mean,
                              rel_err(oracle::mgf_moment(phi, 1, lambda), m.mean));
        worst_second = std::max(worst_second,
                                rel_err(oracle::mgf_moment(phi, 2, lambda), m.second));
        auto phi_w = [&](double s) {
          return analytic::mgf_wait_preempt(s, k, theta, lambda);
        };
        worst_wait = std::max(worst_wait,
                              rel_err(oracle::mgf_moment(phi_w, 1, lambda),
                                      m.mean - 1.0 / lambda));
      }
    }
    rows.push_back(bounded("mgf_interdeparture_mean", worst_mean, 1e-4));
    rows.push_back(bounded("mgf_interdeparture_second", worst_second, 1e-4));
    rows.push_back(bounded("mgf_wait_mean", worst_wait, 1e-4));
  }

  // Monte Carlo conditioning checks.
  {
    const long pairs = opt.quick ? 200'000 : 1'000'000;
    const auto rep = oracle::lemma_checks(2.0, 1.0, 1.0, pairs, opt.seed);
    rows.push_back(bounded("lemma_cond_mean_z", rep.cond_mean_z, 5.0));
    rows.push_back(bounded("lemma_cond_var_z", rep.cond_var_z, 5.0));
    double worst = 0.0;
    for (double z : rep.mgf_z) worst = std::max(worst, std::abs(z));
    rows.push_back(bounded("lemma_mgf_z_max", worst, 5.0));
    CheckRow suff;
    suff.name = "lemma_sample_sufficiency";
    suff.expected = 1.0;
    suff.observed = rep.sufficient ? 1.0 : 0.0;
    suff.tolerance = 0.0;
    suff.pass = rep.sufficient;
    rows.push_back(suff);
  }

  // Residual interarrival after an emptying delivery: memorylessness says
  // Exp(lambda), independent of the delivered packet's system time.
  {
    SimConfig cfg;
    cfg.params.lambda = 1.0;
    cfg.params.service = ServiceDistribution::exponential(1.0);
    cfg.params.scheme = Scheme::LcfsPreempt;
    cfg.seed = opt.seed + 1;
    cfg.horizon = opt.quick ? 120'000 : 400'000;
    cfg.warmup = 2'000;
    SampleSet samples;
    samples.capacity = opt.quick ? 30'000 : 100'000;
    run(cfg, &samples);

    const auto ks = stats::ks_test_exponential(samples.residual_interarrival, cfg.params.lambda);
    rows.push_back(detail::at_least("residual_ks_pvalue", ks.p_value, 0.01,
                                    "n=" + std::to_string(ks.n)));
    const double m = stats::mean(samples.residual_interarrival);
    const double se = std::sqrt(stats::variance(samples.residual_interarrival) /
                                static_cast<double>(samples.residual_interarrival.size()));
    rows.push_back(bounded("residual_mean_z", (m - 1.0 / cfg.params.lambda) / se, 5.0));

    const std::size_t n = std::min(samples.system_time.size(),
                                   samples.residual_interarrival.size());
    std::vector<double> t(samples.system_time.begin(), samples.system_time.begin() + n);
    std::vector<double> x(samples.residual_interarrival.begin(),
                          samples.residual_interarrival.begin() + n);
    const double r_tx = stats::pearson_correlation(t, x);
    rows.push_back(bounded("residual_vs_system_time_corr_z",
                           stats::correlation_zscore(r_tx, n), 5.0));
    const double r_ty =
        stats::pearson_correlation(samples.system_time, samples.interdeparture);
    rows.push_back(bounded("system_time_vs_gap_corr_z",
                           stats::correlation_zscore(r_ty, samples.system_time.size()),
                           5.0));
  }

  return rows;
}

inline bool all_pass(const std::vector<CheckRow>& rows) {
  return std::all_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.pass; });
}

inline void print_table(std::ostream& os, const std::vector<CheckRow>& rows) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-36s %14s %14s %10s  %s\n", "check", "expected",
                "observed", "tol", "result");
  os << buf;
  for (const CheckRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-36s %14.6g %14.6g %10.3g  %s%s%s\n",
                  r.name.c_str(), r.expected, r.observed, r.tolerance,
                  r.pass ? "PASS" : "FAIL", r.note.empty() ? "" : "  ",
                  r.note.c_str());
    os << buf;
  }
  int failed = 0;
  for (const CheckRow& r : rows)
    if (!r.pass) ++failed;
  if (failed == 0)
    os << "all " << rows.size() << " checks passed\n";
  else
    os << failed << " of " << rows.size() << " checks FAILED\n";
}

}  // namespace aoi::validate
