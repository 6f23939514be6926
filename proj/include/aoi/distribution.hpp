#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "aoi/rng.hpp"

namespace aoi {

namespace detail {
inline bool near_integer(double x) {
  return std::abs(x - std::round(x)) <= 1e-9 && std::round(x) >= 1.0;
}
}  // namespace detail

// Service-time law: Gamma(shape k, scale theta) or a point mass at d.
// Exponential service is the k = 1 gamma; Erlang is any integer-k gamma; the
// point mass is the k -> infinity limit at fixed mean.
class ServiceDistribution {
 public:
  enum class Kind { Gamma, Deterministic };

  static ServiceDistribution gamma(double shape, double scale) {
    if (!(shape > 0.0)) throw std::invalid_argument("gamma shape must be > 0");
    if (!(scale > 0.0)) throw std::invalid_argument("gamma scale must be > 0");
    return ServiceDistribution(Kind::Gamma, shape, scale);
  }

  static ServiceDistribution exponential(double mean) { return gamma(1.0, mean); }

  static ServiceDistribution deterministic(double value) {
    if (!(value > 0.0))
      throw std::invalid_argument("deterministic service time must be > 0");
    return ServiceDistribution(Kind::Deterministic, value, 0.0);
  }

  Kind kind() const { return kind_; }
  bool is_gamma() const { return kind_ == Kind::Gamma; }
  bool is_deterministic() const { return kind_ == Kind::Deterministic; }

  double shape() const { require(Kind::Gamma, "shape"); return a_; }
  double scale() const { require(Kind::Gamma, "scale"); return b_; }
  double value() const { require(Kind::Deterministic, "value"); return a_; }

  bool is_erlang() const { return kind_ == Kind::Gamma && detail::near_integer(a_); }

  int stages() const {
    if (!is_erlang()) throw std::invalid_argument("stages: shape is not a positive integer");
    return static_cast<int>(std::llround(a_));
  }

  double mean() const { return kind_ == Kind::Gamma ? a_ * b_ : a_; }
  double variance() const { return kind_ == Kind::Gamma ? a_ * b_ * b_ : 0.0; }

  // Gamma density s^(k-1) e^(-s/theta) / (theta^k Gamma(k)), evaluated in log
  // space. The point mass has no density.
  double pdf(double s) const {
    if (kind_ != Kind::Gamma)
      throw std::invalid_argument("pdf: deterministic service has no density");
    if (s < 0.0) throw std::invalid_argument("pdf: s must be >= 0");
    if (s == 0.0) {
      if (a_ == 1.0) return 1.0 / b_;
      return a_ > 1.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return std::exp((a_ - 1.0) * std::log(s) - s / b_ - a_ * std::log(b_) -
                    std::lgamma(a_));
  }

  double sample(RngStream& rng) const {
    return kind_ == Kind::Gamma ? rng.gamma(a_, b_) : a_;
  }

  nlohmann::json to_json() const {
    if (kind_ == Kind::Gamma) return {{"kind", "gamma"}, {"k", a_}, {"theta", b_}};
    return {{"kind", "deterministic"}, {"d", a_}};
  }

  static ServiceDistribution from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "gamma") return gamma(j.at("k").get<double>(), j.at("theta").get<double>());
    if (kind == "deterministic") return deterministic(j.at("d").get<double>());
    throw std::invalid_argument("unknown distribution kind: " + kind);
  }

  friend bool operator==(const ServiceDistribution& x, const ServiceDistribution& y) {
    return x.kind_ == y.kind_ && x.a_ == y.a_ && x.b_ == y.b_;
  }

 private:
  ServiceDistribution(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}

  void require(Kind k, const char* what) const {
    if (kind_ != k) throw std::invalid_argument(std::string(what) + ": wrong distribution kind");
  }

  Kind kind_;
  double a_;  // gamma shape, or the deterministic value
  double b_;  // gamma scale
};

// Service law experienced by packets that finish before the next arrival,
// when arrivals are Poisson(lambda): Gamma(k, theta/(1+lambda*theta)).
// lambda = 0 is allowed and recovers the unconditioned law.
inline ServiceDistribution conditional_success_dist(double shape, double scale,
                                                    double lambda) {
  if (!(shape > 0.0) || !(scale > 0.0))
    throw std::invalid_argument("conditional_success_dist: shape and scale must be > 0");
  if (!(lambda >= 0.0))
    throw std::invalid_argument("conditional_success_dist: lambda must be >= 0");
  return ServiceDistribution::gamma(shape, scale / (1.0 + lambda * scale));
}

}  // namespace aoi
