#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/exp_sinh.hpp>

#include "aoi/analytic.hpp"
#include "aoi/distribution.hpp"
#include "aoi/rng.hpp"
#include "aoi/stats.hpp"

namespace aoi::oracle {

// Uniformized jump chain of the non-preemptive system with Erlang-k service.
// States: 0 = idle; 1..k = serving stage j with the buffer empty; k+1..2k =
// serving stage j with the buffer occupied.  Both exponential clocks (arrival,
// stage completion) tick at combined rate lambda + 1/theta; a jump is a stage
// completion with probability a and an arrival with probability b = 1 - a.
struct TransitionMatrix {
  int stages = 0;  // k
  Eigen::MatrixXd prob;  // row-stochastic, (2k+1) x (2k+1)

  int size() const { return 2 * stages + 1; }
  static int idle_state() { return 0; }
  static int serving(int j) { return j; }                    // buffer empty
  int serving_full(int j) const { return stages + j; }       // buffer occupied
};

inline TransitionMatrix build_uniformized_chain(int k, double lambda, double theta) {
  if (k < 1) throw std::invalid_argument("chain: k must be a positive integer");
  if (!(lambda > 0.0) || !(theta > 0.0))
    throw std::invalid_argument("chain: lambda and theta must be > 0");
  const double total = lambda + 1.0 / theta;
  const double a = (1.0 / theta) / total;  // stage clock fires first
  const double b = lambda / total;         // arrival fires first
  TransitionMatrix m;
  m.stages = k;
  m.prob = Eigen::MatrixXd::Zero(2 * k + 1, 2 * k + 1);
  Eigen::MatrixXd& p = m.prob;
  // Idle: an arrival starts stage 1; the stage clock ticks idle.
  p(0, 1) += b;
  p(0, 0) += a;
  for (int j = 1; j <= k; ++j) {
    // Buffer empty: stage completion advances (or empties the system at k);
    // an arrival occupies the buffer.
    p(j, j == k ? 0 : j + 1) += a;
    p(j, m.serving_full(j)) += b;
    // Buffer occupied: stage completion advances (at k the buffered packet
    // starts service at stage 1); an arrival replaces the buffer occupant.
    const int full = m.serving_full(j);
    p(full, j == k ? 1 : m.serving_full(j + 1)) += a;
    p(full, full) += b;
  }
  return m;
}

// Stationary distribution of stage-1-with-empty-buffer, in closed form.
inline double pi1_closed_form(int k, double lambda, double theta) {
  if (k < 1) throw std::invalid_argument("pi1_closed_form: k must be >= 1");
  const double q = 1.0 / (1.0 + lambda * theta);
  const double qk1 = std::exp((k + 1.0) * std::log(q));
  return q * (1.0 - q) / (qk1 + k * (1.0 - q));
}

// Stationary row vector: pi * P = pi, sum(pi) = 1.  Direct solve for small
// chains, power iteration beyond that; either way the residual must come out
// below 1e-12 or this throws with the residual attached.
inline Eigen::VectorXd steady_state(const TransitionMatrix& m) {
  const int n = m.size();
  if (n < 1) throw std::invalid_argument("steady_state: empty chain");
  Eigen::VectorXd pi;
  if (n <= 101) {
    Eigen::MatrixXd a = m.prob.transpose() - Eigen::MatrixXd::Identity(n, n);
    a.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;
    pi = a.fullPivLu().solve(rhs);
  } else {
    pi = Eigen::VectorXd::Constant(n, 1.0 / n);
    for (int iter = 0; iter < 1'000'000; ++iter) {
      Eigen::VectorXd next = m.prob.transpose() * pi;
      next /= next.sum();
      const double step = (next - pi).lpNorm<Eigen::Infinity>();
      pi = next;
      if (step < 1e-15) break;
    }
  }
  const double residual = (m.prob.transpose() * pi - pi).lpNorm<Eigen::Infinity>();
  if (!(residual <= 1e-12))
    throw std::runtime_error("steady_state did not converge: residual = " +
                             std::to_string(residual));
  return pi;
}

// Delivered packets per unit time, read off the chain: every visit to stage 1
// with the buffer empty corresponds to one eventual delivery.
inline double effective_rate_from_chain(int k, double lambda, double theta) {
  const TransitionMatrix m = build_uniformized_chain(k, lambda, theta);
  const Eigen::VectorXd pi = steady_state(m);
  return (lambda + 1.0 / theta) * pi(TransitionMatrix::serving(1));
}

// Adaptive integral of f over (0, inf).
template <class F>
double integrate_to_inf(F&& f, double tol = 1e-12) {
  boost::math::quadrature::exp_sinh<double> integrator;
  double error = 0.0, l1 = 0.0;
  const double v = integrator.integrate(f, tol, &error, &l1);
  if (!(error <= 1e-9))
    throw std::runtime_error("quadrature did not converge: error estimate = " +
                             std::to_string(error));
  return v;
}

// P(service beats the next arrival) by direct quadrature of the gamma density
// against exp(-lambda s); the independent route to the closed form.
inline double success_prob_quadrature(double k, double theta, double lambda) {
  if (!(k > 0.0) || !(theta > 0.0))
    throw std::invalid_argument("success_prob_quadrature: k and theta must be > 0");
  if (!(lambda >= 0.0))
    throw std::invalid_argument("success_prob_quadrature: lambda must be >= 0");
  const ServiceDistribution dist = ServiceDistribution::gamma(k, theta);
  return integrate_to_inf(
      [&](double s) { return dist.pdf(s) * std::exp(-lambda * s); });
}

// Numeric derivative of an MGF at 0: Richardson-extrapolated central
// differences.  `scale` sets the step relative to the transform's natural
// scale (pass e.g. lambda); order is 1 or 2.
template <class F>
double mgf_moment(F&& phi, int order, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("mgf_moment: scale must be > 0");
  if (order == 1) {
    const double h = 1e-5 * scale;
    auto d = [&](double step) { return (phi(step) - phi(-step)) / (2.0 * step); };
    return (4.0 * d(h / 2.0) - d(h)) / 3.0;
  }
  if (order == 2) {
    const double h = 2e-4 * scale;
    const double at0 = phi(0.0);
    auto d = [&](double step) {
      return (phi(step) - 2.0 * at0 + phi(-step)) / (step * step);
    };
    return (4.0 * d(h / 2.0) - d(h)) / 3.0;
  }
  throw std::invalid_argument("mgf_moment: order must be 1 or 2");
}

// Monte Carlo check of the two conditioning identities behind the analytic
// pipeline: given independent G ~ Gamma(k,theta) and F ~ Exp(lambda),
//  (a) G | G < F is Gamma(k, theta/(1+lambda*theta));
//  (b) F | F < G has the conditioned-arrival MGF.
// Reported as z-scores of empirical moments against the analytic targets.
struct LemmaCheckReport {
  long pairs = 0;
  long accepted_success = 0;  // G < F
  long accepted_preempt = 0;  // F < G
  double cond_mean = 0.0, cond_mean_z = 0.0;
  double cond_var = 0.0, cond_var_z = 0.0;
  std::array<double, 5> mgf_s{};        // s values checked (multiples of lambda)
  std::array<double, 5> mgf_value{};    // empirical MGF of F | F < G
  std::array<double, 5> mgf_z{};
  bool sufficient = false;  // at least 1000 accepted samples on each side
  std::uint64_t seed = 0;
};

inline LemmaCheckReport lemma_checks(double k, double theta, double lambda,
                                     long n_pairs, std::uint64_t seed) {
  if (!(k > 0.0) || !(theta > 0.0) || !(lambda > 0.0))
    throw std::invalid_argument("lemma_checks: k, theta, lambda must be > 0");
  if (n_pairs < 1) throw std::invalid_argument("lemma_checks: need n_pairs >= 1");

  LemmaCheckReport rep;
  rep.pairs = n_pairs;
  rep.seed = seed;
  rep.mgf_s = {-0.25 * lambda, -0.1 * lambda, 0.0, 0.1 * lambda, 0.25 * lambda};

  RngStream rng(seed);
  KahanSum s1, s2, s3, s4;  // powers of accepted G | G < F
  std::array<KahanSum, 5> es, es2;  // exp(s F) moments over F | F < G

  for (long i = 0; i < n_pairs; ++i) {
    const double g = rng.gamma(k, theta);
    const double f = rng.exponential(lambda);
    if (g < f) {
      ++rep.accepted_success;
      const double gg = g * g;
      s1.add(g);
      s2.add(gg);
      s3.add(gg * g);
      s4.add(gg * gg);
    } else {
      ++rep.accepted_preempt;
      for (std::size_t j = 0; j < rep.mgf_s.size(); ++j) {
        const double e = std::exp(rep.mgf_s[j] * f);
        es[j].add(e);
        es2[j].add(e * e);
      }
    }
  }
  rep.sufficient = rep.accepted_success >= 1000 && rep.accepted_preempt >= 1000;

  if (rep.accepted_success >= 2) {
    const double n = static_cast<double>(rep.accepted_success);
    const double m = s1.value() / n;
    const double raw2 = s2.value() / n, raw3 = s3.value() / n, raw4 = s4.value() / n;
    const double var = raw2 - m * m;
    const double mu4 =
        raw4 - 4.0 * m * raw3 + 6.0 * m * m * raw2 - 3.0 * m * m * m * m;
    const double cond_scale = theta / (1.0 + lambda * theta);
    const double target_mean = k * cond_scale;
    const double target_var = k * cond_scale * cond_scale;
    rep.cond_mean = m;
    rep.cond_var = var;
    rep.cond_mean_z = (m - target_mean) / std::sqrt(var / n);
    rep.cond_var_z = (var - target_var) / std::sqrt((mu4 - var * var) / n);
  }

  if (rep.accepted_preempt >= 2) {
    const double n = static_cast<double>(rep.accepted_preempt);
    for (std::size_t j = 0; j < rep.mgf_s.size(); ++j) {
      const double m = es[j].value() / n;
      rep.mgf_value[j] = m;
      if (rep.mgf_s[j] == 0.0) {
        rep.mgf_z[j] = 0.0;  // exp(0) is identically 1
        continue;
      }
      const double var = es2[j].value() / n - m * m;
      const double target =
          analytic::mgf_conditioned_arrival(rep.mgf_s[j], k, theta, lambda);
      rep.mgf_z[j] = (m - target) / std::sqrt(var / n);
    }
  }
  return rep;
}

}  // namespace aoi::oracle
