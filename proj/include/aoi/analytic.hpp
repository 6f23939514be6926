#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "aoi/distribution.hpp"

namespace aoi {

enum class Scheme { LcfsPreempt, LcfsNoPreempt };

inline const char* scheme_name(Scheme s) {
  return s == Scheme::LcfsPreempt ? "preempt" : "nopreempt";
}

inline Scheme scheme_from_name(const std::string& s) {
  if (s == "preempt") return Scheme::LcfsPreempt;
  if (s == "nopreempt") return Scheme::LcfsNoPreempt;
  throw std::invalid_argument("unknown scheme: " + s + " (expected preempt or nopreempt)");
}

// One parameter point: Poisson(lambda) status updates into a single LCFS
// server with the given service law.
struct SystemParams {
  double lambda = 1.0;
  ServiceDistribution service = ServiceDistribution::exponential(1.0);
  Scheme scheme = Scheme::LcfsPreempt;

  void validate() const {
    if (!(lambda > 0.0))
      throw std::invalid_argument(
          "lambda must be > 0 (with no arrivals the age grows without bound)");
  }
};

// Closed-form performance numbers at one parameter point.  avg_age and
// avg_peak are the headline metrics; the rest are the moments they decompose
// into.  Two identities hold to rounding error by construction:
//   avg_age  == effective_rate * mean_area
//   avg_peak == mean_system_time + mean_interdeparture
struct AnalyticReport {
  double avg_age = 0.0;
  double avg_peak = 0.0;
  double effective_rate = 0.0;             // delivered packets per unit time
  double success_prob = 0.0;               // P(a packet survives to delivery)
  double mean_system_time = 0.0;           // E(T), delivered packets
  double mean_interdeparture = 0.0;        // E(Y)
  double second_moment_interdeparture = 0.0;  // E(Y^2)
  double mean_area = 0.0;                  // E(Q), per-delivery area under the age curve
  std::optional<double> cross_moment;      // E(T*Y); set for the non-preemptive scheme
};

namespace analytic {

namespace detail {

// (1+x)^n as exp(n*log1p(x)): accurate for small x, no premature overflow for
// the k ~ 1e3 shapes used in limit checks.
inline double pow1p(double x, double n) { return std::exp(n * std::log1p(x)); }

inline void require_rate(double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
}

inline void require_gamma(double k, double theta) {
  if (!(k > 0.0)) throw std::invalid_argument("shape k must be > 0");
  if (!(theta > 0.0)) throw std::invalid_argument("scale theta must be > 0");
}

inline int require_erlang(double k) {
  if (!aoi::detail::near_integer(k))
    throw std::invalid_argument(
        "k must be a positive integer for the non-preemptive scheme (stage "
        "bookkeeping requires whole service stages)");
  return static_cast<int>(std::llround(k));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Preemptive LCFS (a new arrival always takes over the server)
// ---------------------------------------------------------------------------

// P(service beats the next arrival) = (1+lambda*theta)^(-k).
inline double success_prob(double k, double theta, double lambda) {
  detail::require_gamma(k, theta);
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  return detail::pow1p(lambda * theta, -k);
}

// E(T) for delivered packets: k*theta/(1+lambda*theta).
inline double mean_system_time_preempt(double k, double theta, double lambda) {
  detail::require_gamma(k, theta);
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  return k * theta / (1.0 + lambda * theta);
}

// MGF of the interarrival gap conditioned on the arrival beating the service
// clock. Defined for s < lambda.
inline double mgf_conditioned_arrival(double s, double k, double theta, double lambda) {
  detail::require_gamma(k, theta);
  detail::require_rate(lambda);
  if (!(s < lambda))
    throw std::domain_error("mgf_conditioned_arrival: requires s < lambda");
  const double p = detail::pow1p(lambda * theta, -k);
  const double g = detail::pow1p(theta * (lambda - s), -k);
  return (lambda / (lambda - s)) * (1.0 - g) / (1.0 - p);
}

namespace detail {
// Common denominator lambda - s*(1+theta*(lambda-s))^k of the wait and
// interdeparture transforms; throws past the smallest positive singularity.
inline double interdeparture_denom(double s, double k, double theta, double lambda) {
  const double arg = theta * (lambda - s);
  if (!(1.0 + arg > 0.0))
    throw std::domain_error("mgf out of domain: s beyond the transform's reach");
  const double denom = lambda - s * pow1p(arg, k);
  if (!(denom > 0.0))
    throw std::domain_error(
        "mgf out of domain: s at or beyond the smallest positive singularity");
  return denom;
}
}  // namespace detail

// MGF of the server-occupied part of a delivery cycle (failed attempts plus
// the final successful service).
inline double mgf_wait_preempt(double s, double k, double theta, double lambda) {
  detail::require_gamma(k, theta);
  detail::require_rate(lambda);
  return (lambda - s) / detail::interdeparture_denom(s, k, theta, lambda);
}

// MGF of the interdeparture time Y under preemption.
inline double mgf_interdeparture_preempt(double s, double k, double theta, double lambda) {
  detail::require_gamma(k, theta);
  detail::require_rate(lambda);
  return lambda / detail::interdeparture_denom(s, k, theta, lambda);
}

struct Moments2 {
  double mean = 0.0;
  double second = 0.0;
};

// E(Y) and E(Y^2) under preemption, in closed form.
inline Moments2 interdeparture_moments_preempt(double k, double theta, double lambda) {
  detail::require_gamma(k, theta);
  detail::require_rate(lambda);
  const double lt = lambda * theta;
  const double grow = detail::pow1p(lt, k);  // (1+lambda*theta)^k
  Moments2 m;
  m.mean = grow / lambda;
  m.second = 2.0 * detail::pow1p(lt, k - 1.0) *
             (detail::pow1p(lt, k + 1.0) - k * theta * lambda) / (lambda * lambda);
  return m;
}

inline double avg_age_preempt(double k, double theta, double lambda) {
  detail::require_gamma(k, theta);
  detail::require_rate(lambda);
  return detail::pow1p(lambda * theta, k) / lambda;
}

inline double avg_peak_preempt(double k, double theta, double lambda) {
  return mean_system_time_preempt(k, theta, lambda) +
         detail::pow1p(lambda * theta, k) / lambda;
}

inline AnalyticReport preempt_report(double k, double theta, double lambda) {
  detail::require_gamma(k, theta);
  detail::require_rate(lambda);
  const double lt = lambda * theta;
  AnalyticReport r;
  r.success_prob = detail::pow1p(lt, -k);
  r.effective_rate = lambda * r.success_prob;
  r.mean_system_time = k * theta / (1.0 + lt);
  const Moments2 m = interdeparture_moments_preempt(k, theta, lambda);
  r.mean_interdeparture = m.mean;
  r.second_moment_interdeparture = m.second;
  r.mean_area = detail::pow1p(lt, 2.0 * k) / (lambda * lambda);
  r.avg_age = detail::pow1p(lt, k) / lambda;
  r.avg_peak = r.mean_system_time + r.mean_interdeparture;
  return r;
}

// ---------------------------------------------------------------------------
// Non-preemptive LCFS (single-slot buffer; the newest arrival replaces any
// waiting packet, service in progress is never interrupted)
// ---------------------------------------------------------------------------

// P(the previous delivery left j remaining service stages ahead of the tagged
// packet's own service), j in 0..k.  j = 0 means it found the system idle.
inline double psi_prob(int j, int k, double theta, double lambda) {
  detail::require_gamma(static_cast<double>(k), theta);
  detail::require_rate(lambda);
  if (j < 0 || j > k) throw std::invalid_argument("psi_prob: j must lie in 0..k");
  const double lt = lambda * theta;
  if (j == 0) return detail::pow1p(lt, -static_cast<double>(k));
  return lt * detail::pow1p(lt, -static_cast<double>(k - j + 1));
}

// E(T | j stages ahead at arrival, l stages left when the follow-up packet
// arrives).  l = 0 encodes "no follow-up arrived before this delivery".
inline double cond_system_time_np(int j, int l, int k, double theta, double lambda) {
  detail::require_gamma(static_cast<double>(k), theta);
  detail::require_rate(lambda);
  if (j < 0 || j > k) throw std::invalid_argument("cond_system_time_np: j must lie in 0..k");
  if (l < 0 || l > k) throw std::invalid_argument("cond_system_time_np: l must lie in 0..k");
  const double lt = lambda * theta;
  const double den = 1.0 + lt;
  const double kd = k, jd = j, ld = l;
  if (j == 0 && l == 0) return kd * theta / den;
  if (j > 0 && l == 0) return theta * (kd + 1.0 + jd * lt) / den;
  if (j == 0) return theta * (2.0 * kd - ld + 1.0) / den;
  return theta * (2.0 * kd - ld + 2.0 + jd * lt) / den;
}

// E(Y | j stages ahead at the generating arrival).
inline double cond_interdeparture_np(int j, int k, double theta, double lambda) {
  detail::require_gamma(static_cast<double>(k), theta);
  detail::require_rate(lambda);
  if (j < 0 || j > k) throw std::invalid_argument("cond_interdeparture_np: j must lie in 0..k");
  if (j == 0) return 1.0 / lambda + k * theta;
  return k * theta;
}

struct NoPreemptMoments {
  double cross_moment = 0.0;                // E(T*Y)
  double second_moment_interdeparture = 0.0;  // E(Y^2)
  double mean_area = 0.0;                   // E(Q) = E(T*Y) + E(Y^2)/2
  double mean_system_time = 0.0;            // E(T)
  double mean_interdeparture = 0.0;         // E(Y)
};

inline NoPreemptMoments nopreempt_moments(double k_in, double theta, double lambda) {
  detail::require_gamma(k_in, theta);
  detail::require_rate(lambda);
  const int k = detail::require_erlang(k_in);
  const double kd = k;
  const double lt = lambda * theta;
  const double q = 1.0 / (1.0 + lt);
  const double qk = detail::pow1p(lt, -kd);
  NoPreemptMoments m;
  m.cross_moment =
      (kd * theta / lambda) * (1.0 + kd * lt) +
      qk * (1.0 - kd * lt * (2.0 * kd + 1.0)) / (lambda * lambda) +
      qk * q * kd * theta * (1.0 + kd * lt + 2.0 * kd) / lambda -
      qk * qk / (lambda * lambda) - (kd * theta / lambda) * qk * qk * q;
  m.second_moment_interdeparture =
      kd * theta * theta * (1.0 + kd) + qk * (2.0 + 2.0 * kd * lt) / (lambda * lambda);
  m.mean_area = m.cross_moment + 0.5 * m.second_moment_interdeparture;
  m.mean_system_time = 1.0 / lambda + kd * theta - qk * q * (1.0 + lt + kd * lt) / lambda;
  m.mean_interdeparture = kd * theta + qk / lambda;
  return m;
}

// Delivered packets per unit time without preemption.
inline double effective_rate_nopreempt(double k_in, double theta, double lambda) {
  detail::require_gamma(k_in, theta);
  detail::require_rate(lambda);
  const double kd = detail::require_erlang(k_in);
  const double grow = detail::pow1p(lambda * theta, kd);
  return lambda * grow / (1.0 + kd * lambda * theta * grow);
}

// Average age without preemption, in the direct four-term closed form.
inline double avg_age_nopreempt(double k_in, double theta, double lambda) {
  detail::require_gamma(k_in, theta);
  detail::require_rate(lambda);
  const double kd = detail::require_erlang(k_in);
  const double lt = lambda * theta;
  const double qk = detail::pow1p(lt, -kd);
  const double grow = detail::pow1p(lt, kd);
  const double t1 = kd * theta * (2.0 + lt + 3.0 * kd * lt) / (2.0 * (qk + kd * lt));
  const double t2 = 2.0 * (1.0 - kd * kd * lt) / (lambda * (1.0 + kd * lt * grow));
  const double t3 = kd * theta * (1.0 + kd * lt + 2.0 * kd) /
                    (1.0 + lt + kd * lt * detail::pow1p(lt, kd + 1.0));
  const double t4 = (1.0 + lt + kd * lt) /
                    (lambda * (1.0 + lt) * (grow + kd * lt * detail::pow1p(lt, 2.0 * kd)));
  return t1 + t2 + t3 - t4;
}

// Same quantity assembled as effective_rate * mean_area; kept as a separate
// code path so the two routes can be compared.
inline double avg_age_nopreempt_via_area(double k, double theta, double lambda) {
  return effective_rate_nopreempt(k, theta, lambda) *
         nopreempt_moments(k, theta, lambda).mean_area;
}

inline double avg_peak_nopreempt(double k_in, double theta, double lambda) {
  detail::require_gamma(k_in, theta);
  detail::require_rate(lambda);
  const double kd = detail::require_erlang(k_in);
  return 1.0 / lambda + 2.0 * kd * theta -
         kd * theta * detail::pow1p(lambda * theta, -(kd + 1.0));
}

inline AnalyticReport nopreempt_report(double k, double theta, double lambda) {
  const NoPreemptMoments m = nopreempt_moments(k, theta, lambda);
  AnalyticReport r;
  r.effective_rate = effective_rate_nopreempt(k, theta, lambda);
  r.success_prob = r.effective_rate / lambda;
  r.mean_system_time = m.mean_system_time;
  r.mean_interdeparture = m.mean_interdeparture;
  r.second_moment_interdeparture = m.second_moment_interdeparture;
  r.mean_area = m.mean_area;
  r.cross_moment = m.cross_moment;
  r.avg_age = avg_age_nopreempt(k, theta, lambda);
  r.avg_peak = avg_peak_nopreempt(k, theta, lambda);
  return r;
}

// ---------------------------------------------------------------------------
// Deterministic service (point mass at 1/mu), both schemes
// ---------------------------------------------------------------------------

struct DeterministicAges {
  double avg_age_preempt = 0.0;
  double avg_peak_preempt = 0.0;
  double avg_age_nopreempt = 0.0;
  double avg_peak_nopreempt = 0.0;
};

inline DeterministicAges deterministic_ages(double lambda, double mu) {
  detail::require_rate(lambda);
  if (!(mu > 0.0)) throw std::invalid_argument("mu must be > 0");
  const double rho = lambda / mu;
  const double ep = std::exp(rho);
  const double en = std::exp(-rho);
  DeterministicAges d;
  d.avg_age_preempt = ep / lambda;
  d.avg_peak_preempt = 1.0 / mu + ep / lambda;
  d.avg_age_nopreempt =
      (2.0 * (2.0 + rho - rho * rho) - 2.0 * en * (1.0 + rho) +
       rho * ep * (2.0 + 3.0 * rho)) /
      (2.0 * lambda * (1.0 + rho * ep));
  d.avg_peak_nopreempt = 1.0 / lambda + (2.0 - en) / mu;
  return d;
}

inline AnalyticReport deterministic_report(double lambda, double mu, Scheme scheme) {
  detail::require_rate(lambda);
  if (!(mu > 0.0)) throw std::invalid_argument("mu must be > 0");
  const double rho = lambda / mu;
  const double ep = std::exp(rho);
  const double en = std::exp(-rho);
  const DeterministicAges ages = deterministic_ages(lambda, mu);
  AnalyticReport r;
  if (scheme == Scheme::LcfsPreempt) {
    r.success_prob = en;
    r.effective_rate = lambda * en;
    r.mean_system_time = 1.0 / mu;
    r.mean_interdeparture = ep / lambda;
    r.second_moment_interdeparture = 2.0 * ep * (ep - rho) / (lambda * lambda);
    r.mean_area = ep * ep / (lambda * lambda);
    r.avg_age = ages.avg_age_preempt;
    r.avg_peak = r.mean_system_time + r.mean_interdeparture;
  } else {
    r.effective_rate = lambda * ep / (1.0 + rho * ep);
    r.success_prob = r.effective_rate / lambda;
    r.mean_system_time = 1.0 / lambda + 1.0 / mu - en * (1.0 + rho) / lambda;
    r.mean_interdeparture = 1.0 / mu + en / lambda;
    r.second_moment_interdeparture =
        1.0 / (mu * mu) + 2.0 * en * (1.0 + rho) / (lambda * lambda);
    r.avg_age = ages.avg_age_nopreempt;
    r.mean_area = r.avg_age / r.effective_rate;
    r.cross_moment = r.mean_area - 0.5 * r.second_moment_interdeparture;
    r.avg_peak = ages.avg_peak_nopreempt;
  }
  return r;
}

// ---------------------------------------------------------------------------

inline AnalyticReport report(const SystemParams& params) {
  params.validate();
  if (params.service.is_deterministic())
    return deterministic_report(params.lambda, 1.0 / params.service.value(),
                                params.scheme);
  const double k = params.service.shape();
  const double theta = params.service.scale();
  return params.scheme == Scheme::LcfsPreempt
             ? preempt_report(k, theta, params.lambda)
             : nopreempt_report(k, theta, params.lambda);
}

}  // namespace analytic
}  // namespace aoi
