// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
// failure.  Tolerances are pinned here on purpose; numbers in the detail
// strings are the observed worst cases.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "aoi/analytic.hpp"
#include "aoi/oracle.hpp"
#include "aoi/simulate.hpp"
#include "aoi/stats.hpp"
#include "aoi/sweep.hpp"

using namespace aoi;

namespace {

constexpr std::uint64_t kSeedBase = 20250813;

int g_failures = 0;

std::string strprintf(const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, ap);
  va_end(ap);
  return buf;
}

void report(int idx, const char* label, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", idx, label,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double rel_err(double got, double want) {
  const double scale = std::max(std::abs(want), 1e-300);
  return std::abs(got - want) / scale;
}

const std::vector<double> kLambdaGrid = {0.1, 0.5, 1.0, 2.0, 5.0, 10.0};

AnalyticReport closed_form(Scheme scheme, const ServiceDistribution& svc, double lambda) {
  SystemParams p;
  p.lambda = lambda;
  p.service = svc;
  p.scheme = scheme;
  return analytic::report(p);
}

SimReport sim_run(Scheme scheme, const ServiceDistribution& svc, double lambda,
                  std::uint64_t tag, SampleSet* samples = nullptr) {
  SimConfig cfg;
  cfg.params.lambda = lambda;
  cfg.params.service = svc;
  cfg.params.scheme = scheme;
  cfg.seed = splitmix64(kSeedBase ^ splitmix64(tag));
  cfg.horizon = 2'000'000;
  cfg.warmup = 10'000;
  cfg.batches = 20;
  return run(cfg, samples);
}

// Tracks the worst |simulated - target| / SE over a set of checks.
struct WorstZ {
  double z = 0.0;
  std::string where;
  bool ok = true;

  void check(double value, double target, double se, const std::string& where_,
             double gate = 3.0) {
    if (!(se > 0.0) || !std::isfinite(value)) {
      ok = false;
      where = where_ + " (no standard error)";
      z = std::numeric_limits<double>::infinity();
      return;
    }
    const double zz = std::abs(value - target) / se;
    if (zz > z) {
      z = zz;
      where = where_;
    }
    if (zz > gate) ok = false;
  }
};

// 1. Consistency identities inside every closed-form report.
void criterion1() {
  double worst = 0.0;
  std::string where;
  for (int k = 1; k <= 10; ++k) {
    const double theta = 1.0 / k;
    const ServiceDistribution svc = ServiceDistribution::gamma(k, theta);
    for (double lambda : kLambdaGrid) {
      for (Scheme s : {Scheme::LcfsPreempt, Scheme::LcfsNoPreempt}) {
        const AnalyticReport r = closed_form(s, svc, lambda);
        const double e1 = rel_err(r.effective_rate * r.mean_area, r.avg_age);
        const double e2 = rel_err(r.mean_system_time + r.mean_interdeparture, r.avg_peak);
        const double e = std::max(e1, e2);
        if (e > worst) {
          worst = e;
          where = strprintf("%s k=%d lambda=%g", scheme_name(s), k, lambda);
        }
      }
    }
  }
  report(1, "age and peak-age identities in the closed forms", worst < 1e-12,
         strprintf("worst rel err %.2e at %s, gate 1e-12", worst, where.c_str()));
}

// 2. Conditional-sum route vs the closed-form moments.
void criterion2() {
  double worst = 0.0;
  std::string where;
  for (int k = 1; k <= 10; ++k) {
    const double theta = 1.0 / k;
    for (double lambda : kLambdaGrid) {
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
      const double e = std::max(rel_err(cross, m.cross_moment),
                                rel_err(t_mean, m.mean_system_time));
      if (e > worst) {
        worst = e;
        where = strprintf("k=%d lambda=%g", k, lambda);
      }
    }
  }
  report(2, "conditional-sum moments match the closed forms", worst < 1e-10,
         strprintf("worst rel err %.2e at %s, gate 1e-10", worst, where.c_str()));
}

// 3. Uniformized-chain solver vs the closed forms.
void criterion3() {
  double worst = 0.0;
  std::string where;
  for (int k = 1; k <= 20; ++k) {
    const double theta = 1.0 / k;
    for (double lambda : kLambdaGrid) {
      const auto chain = oracle::build_uniformized_chain(k, lambda, theta);
      const Eigen::VectorXd pi = oracle::steady_state(chain);
      const double pi1 = pi(oracle::TransitionMatrix::serving(1));
      const double e1 = rel_err(pi1, oracle::pi1_closed_form(k, lambda, theta));
      const double rate = (lambda + 1.0 / theta) * pi1;
      const double e2 =
          rel_err(rate, analytic::effective_rate_nopreempt(k, theta, lambda));
      const double e = std::max(e1, e2);
      if (e > worst) {
        worst = e;
        where = strprintf("k=%d lambda=%g", k, lambda);
      }
    }
  }
  report(3, "chain steady state matches the closed forms", worst < 1e-10,
         strprintf("worst rel err %.2e at %s, gate 1e-10", worst, where.c_str()));
}

// 4. Success probability by quadrature.
void criterion4() {
  double worst = 0.0;
  std::string where;
  for (int k = 1; k <= 10; ++k) {
    const double theta = 1.0 / k;
    for (double lambda : kLambdaGrid) {
      const double e = rel_err(oracle::success_prob_quadrature(k, theta, lambda),
                               analytic::success_prob(k, theta, lambda));
      if (e > worst) {
        worst = e;
        where = strprintf("k=%d lambda=%g", k, lambda);
      }
    }
  }
  report(4, "quadrature success probability matches the closed form", worst < 1e-9,
         strprintf("worst rel err %.2e at %s, gate 1e-9", worst, where.c_str()));
}

// 5. Preemptive simulation vs closed forms.
void criterion5() {
  const double spot_age = analytic::avg_age_preempt(1.0, 1.0, 1.0);
  const double spot_peak = analytic::avg_peak_preempt(1.0, 1.0, 1.0);
  if (rel_err(spot_age, 2.0) > 1e-12 || rel_err(spot_peak, 2.5) > 1e-12) {
    report(5, "preemptive simulation within 3 SE of the closed forms", false,
           strprintf("spot values off: age %.12g (want 2), peak %.12g (want 2.5)",
                     spot_age, spot_peak));
    return;
  }
  WorstZ w;
  std::uint64_t tag = 500;
  for (auto [k, theta] : {std::pair{1.0, 1.0}, {2.0, 0.5}, {3.0, 1.0 / 3.0}}) {
    const ServiceDistribution svc = ServiceDistribution::gamma(k, theta);
    for (double lambda : {0.2, 1.0, 5.0, 10.0}) {
      const AnalyticReport a = closed_form(Scheme::LcfsPreempt, svc, lambda);
      const SimReport s = sim_run(Scheme::LcfsPreempt, svc, lambda, ++tag);
      const std::string at = strprintf("k=%g lambda=%g", k, lambda);
      w.check(s.avg_age, a.avg_age, s.avg_age_se, at + " avg_age");
      w.check(s.avg_peak, a.avg_peak, s.avg_peak_se, at + " avg_peak");
      w.check(s.effective_rate, a.effective_rate, s.effective_rate_se,
              at + " effective_rate");
      w.check(s.drop_fraction, 1.0 - a.success_prob, s.drop_fraction_se,
              at + " drop_fraction");
    }
  }
  report(5, "preemptive simulation within 3 SE of the closed forms", w.ok,
         strprintf("worst |dev|/SE %.2f at %s over 12 runs", w.z, w.where.c_str()));
}

// 6. Non-preemptive simulation vs closed forms.
void criterion6() {
  const AnalyticReport spot =
      closed_form(Scheme::LcfsNoPreempt, ServiceDistribution::gamma(1.0, 1.0), 1.0);
  if (rel_err(spot.avg_age, 29.0 / 12.0) > 1e-12 ||
      rel_err(spot.avg_peak, 2.75) > 1e-12 ||
      rel_err(spot.effective_rate, 2.0 / 3.0) > 1e-12) {
    report(6, "non-preemptive simulation within 3 SE of the closed forms", false,
           strprintf("spot values off: age %.12g (want 29/12), peak %.12g (want 2.75), "
                     "rate %.12g (want 2/3)",
                     spot.avg_age, spot.avg_peak, spot.effective_rate));
    return;
  }
  WorstZ w;
  std::uint64_t tag = 600;
  for (auto [k, theta] : {std::pair{1.0, 1.0}, {2.0, 0.5}, {3.0, 1.0 / 3.0}}) {
    const ServiceDistribution svc = ServiceDistribution::gamma(k, theta);
    for (double lambda : {0.2, 1.0, 5.0, 10.0}) {
      const AnalyticReport a = closed_form(Scheme::LcfsNoPreempt, svc, lambda);
      const SimReport s = sim_run(Scheme::LcfsNoPreempt, svc, lambda, ++tag);
      const std::string at = strprintf("k=%g lambda=%g", k, lambda);
      w.check(s.avg_age, a.avg_age, s.avg_age_se, at + " avg_age");
      w.check(s.avg_peak, a.avg_peak, s.avg_peak_se, at + " avg_peak");
      w.check(s.effective_rate, a.effective_rate, s.effective_rate_se,
              at + " effective_rate");
    }
  }
  report(6, "non-preemptive simulation within 3 SE of the closed forms", w.ok,
         strprintf("worst |dev|/SE %.2f at %s over 12 runs", w.z, w.where.c_str()));
}

// 7. Deterministic service, both schemes.
void criterion7() {
  const ServiceDistribution det = ServiceDistribution::deterministic(1.0);
  const AnalyticReport p1 = closed_form(Scheme::LcfsPreempt, det, 1.0);
  const AnalyticReport n1 = closed_form(Scheme::LcfsNoPreempt, det, 1.0);
  const double e_spot = std::max(
      {rel_err(p1.avg_age, std::exp(1.0)), rel_err(n1.avg_age, 2.16765324971211),
       rel_err(p1.avg_peak, 1.0 + std::exp(1.0)),
       rel_err(n1.avg_peak, 3.0 - std::exp(-1.0))});
  if (e_spot > 1e-10) {
    report(7, "deterministic-service simulation within 3 SE of the closed forms",
           false, strprintf("spot values off by rel err %.2e", e_spot));
    return;
  }
  WorstZ w;
  std::uint64_t tag = 700;
  for (double lambda : {0.5, 1.0, 2.0}) {
    for (Scheme s : {Scheme::LcfsPreempt, Scheme::LcfsNoPreempt}) {
      const AnalyticReport a = closed_form(s, det, lambda);
      const SimReport r = sim_run(s, det, lambda, ++tag);
      const std::string at = strprintf("%s lambda=%g", scheme_name(s), lambda);
      w.check(r.avg_age, a.avg_age, r.avg_age_se, at + " avg_age");
      w.check(r.avg_peak, a.avg_peak, r.avg_peak_se, at + " avg_peak");
    }
  }
  report(7, "deterministic-service simulation within 3 SE of the closed forms", w.ok,
         strprintf("worst |dev|/SE %.2f at %s over 6 runs", w.z, w.where.c_str()));
}

// 8. Convergence of the k=1000 gamma age to the deterministic limit.
void criterion8() {
  double worst = 0.0;
  std::string where;
  for (double lambda : {0.5, 1.0, 2.0}) {
    const double limit = std::exp(lambda) / lambda;
    const double e = rel_err(analytic::avg_age_preempt(1000.0, 1e-3, lambda), limit);
    if (e > worst) {
      worst = e;
      where = strprintf("lambda=%g", lambda);
    }
  }
  report(8, "k=1000 preemptive age within 0.1% of the deterministic limit",
         worst < 1e-3,
         strprintf("worst rel err %.4e at %s, gate 1e-3", worst, where.c_str()));
}

// 9. Shapes of the sweep curves.
void criterion9() {
  std::vector<std::string> problems;

  for (double lambda : sweep::preset("fig4").lambdas.values()) {
    double prev = -1.0;
    for (double k : {1.0, 2.0, 3.0, 10.0}) {
      const double age = analytic::avg_age_preempt(k, 1.0 / k, lambda);
      if (age <= prev)
        problems.push_back(strprintf("preempt age not increasing in k at lambda=%g", lambda));
      prev = age;
    }
  }

  for (double lambda : sweep::preset("fig5").lambdas.values()) {
    if (lambda < 1.0) continue;
    double prev = std::numeric_limits<double>::infinity();
    for (int k : {1, 2, 3}) {
      const double age = analytic::avg_age_nopreempt(k, 1.0 / k, lambda);
      if (age >= prev)
        problems.push_back(
            strprintf("nopreempt age not decreasing in k at lambda=%g", lambda));
      prev = age;
    }
  }

  const double p10 = analytic::avg_age_preempt(2.0, 0.5, 10.0);
  const double np10 = analytic::avg_age_nopreempt(2, 0.5, 10.0);
  const double p1 = analytic::avg_age_preempt(2.0, 0.5, 1.0);
  const double np1 = analytic::avg_age_nopreempt(2, 0.5, 1.0);
  if (rel_err(p10, 3.6) > 1e-12 || rel_err(np10, 1.84125371909) > 1e-8 ||
      !(p10 > np10))
    problems.push_back(strprintf("k=2 high-rate comparison off: %.6g vs %.6g", p10, np10));
  if (rel_err(p1, 2.25) > 1e-12 || !(p1 < np1))
    problems.push_back(strprintf("k=2 near-unit-rate comparison off: %.6g vs %.6g", p1, np1));

  const ServiceDistribution det = ServiceDistribution::deterministic(1.0);
  for (double lambda : sweep::preset("fig7").lambdas.values()) {
    const AnalyticReport p = closed_form(Scheme::LcfsPreempt, det, lambda);
    const AnalyticReport n = closed_form(Scheme::LcfsNoPreempt, det, lambda);
    if (!(n.avg_age < p.avg_age) || !(n.avg_peak < p.avg_peak))
      problems.push_back(
          strprintf("deterministic dominance fails at lambda=%g", lambda));
  }

  report(9, "sweep curves have the documented shapes", problems.empty(),
         problems.empty() ? strprintf("all shape checks hold on the preset grids")
                          : problems.front());
}

// 10. High-rate limit of the non-preemptive age.
void criterion10() {
  double worst = 0.0;
  std::string where;
  for (int k : {1, 2, 3}) {
    const double theta = 1.0 / k;
    const double limit = theta / 2.0 + 1.5 * k * theta;
    const double e = rel_err(analytic::avg_age_nopreempt(k, theta, 1000.0), limit);
    if (e > worst) {
      worst = e;
      where = strprintf("k=%d", k);
    }
  }
  report(10, "non-preemptive age at lambda=1000 near its high-rate limit",
         worst < 1e-2, strprintf("worst rel err %.2e at %s, gate 1e-2", worst, where.c_str()));
}

// 11. Distributional Monte Carlo checks.
void criterion11() {
  std::vector<std::string> problems;

  SampleSet samples;
  const SimReport rep = sim_run(Scheme::LcfsPreempt,
                                ServiceDistribution::gamma(2.0, 0.5), 1.0, 1101,
                                &samples);
  (void)rep;
  const auto ks = stats::ks_test_exponential(samples.residual_interarrival, 1.0);
  if (!(ks.p_value >= 0.01))
    problems.push_back(strprintf("residual interarrival KS p=%.4f < 0.01", ks.p_value));

  const double r = stats::pearson_correlation(samples.system_time, samples.interdeparture);
  const double z = stats::correlation_zscore(r, samples.system_time.size());
  if (!(std::abs(z) < 5.0))
    problems.push_back(strprintf("system-time/interdeparture corr z=%.2f", z));

  const auto lemma = oracle::lemma_checks(2.0, 0.5, 1.0, 1'000'000,
                                          splitmix64(kSeedBase ^ splitmix64(1102)));
  if (!lemma.sufficient) problems.push_back("lemma Monte Carlo undersampled");
  if (!(std::abs(lemma.cond_mean_z) < 5.0) || !(std::abs(lemma.cond_var_z) < 5.0))
    problems.push_back(strprintf("conditioned-service z: mean %.2f var %.2f",
                                 lemma.cond_mean_z, lemma.cond_var_z));
  for (double mz : lemma.mgf_z)
    if (!(std::abs(mz) < 5.0))
      problems.push_back(strprintf("conditioned-arrival MGF z=%.2f", mz));

  report(11, "distributional Monte Carlo checks", problems.empty(),
         problems.empty()
             ? strprintf("KS p=%.3f, corr z=%.2f, lemma z within 5", ks.p_value, z)
             : problems.front());
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  criterion11();
  std::printf("%d of 11 criteria passed\n", 11 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
