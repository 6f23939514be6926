#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "aoi/distribution.hpp"
#include "aoi/oracle.hpp"
#include "aoi/rng.hpp"
#include "aoi/stats.hpp"

using namespace aoi;
using Catch::Approx;

namespace {

struct SampleMoments {
  double mean = 0.0;
  double var = 0.0;
  double se_mean = 0.0;
  double se_var = 0.0;  // via the fourth central moment
};

SampleMoments draw_moments(const ServiceDistribution& d, long n, std::uint64_t seed) {
  RngStream rng(seed);
  KahanSum s1, s2, s3, s4;
  for (long i = 0; i < n; ++i) {
    const double x = d.sample(rng);
    const double xx = x * x;
    s1.add(x);
    s2.add(xx);
    s3.add(xx * x);
    s4.add(xx * xx);
  }
  const double nn = static_cast<double>(n);
  SampleMoments m;
  m.mean = s1.value() / nn;
  const double raw2 = s2.value() / nn, raw3 = s3.value() / nn, raw4 = s4.value() / nn;
  m.var = raw2 - m.mean * m.mean;
  const double mu4 = raw4 - 4.0 * m.mean * raw3 + 6.0 * m.mean * m.mean * raw2 -
                     3.0 * std::pow(m.mean, 4);
  m.se_mean = std::sqrt(m.var / nn);
  m.se_var = std::sqrt((mu4 - m.var * m.var) / nn);
  return m;
}

}  // namespace

TEST_CASE("gamma moments") {
  const auto g = ServiceDistribution::gamma(2.0, 0.5);
  REQUIRE(g.mean() == Approx(1.0));
  REQUIRE(g.variance() == Approx(0.5));
  REQUIRE(g.shape() == 2.0);
  REQUIRE(g.scale() == 0.5);
  REQUIRE(g.is_gamma());
  REQUIRE_FALSE(g.is_deterministic());

  const auto e = ServiceDistribution::exponential(2.0);
  REQUIRE(e.shape() == 1.0);
  REQUIRE(e.mean() == Approx(2.0));
  REQUIRE(e.variance() == Approx(4.0));
}

TEST_CASE("deterministic moments") {
  const auto d = ServiceDistribution::deterministic(3.0);
  REQUIRE(d.mean() == 3.0);
  REQUIRE(d.variance() == 0.0);
  REQUIRE(d.value() == 3.0);
  REQUIRE(d.is_deterministic());
  RngStream rng(1);
  for (int i = 0; i < 10; ++i) REQUIRE(d.sample(rng) == 3.0);
}

TEST_CASE("erlang detection") {
  REQUIRE(ServiceDistribution::gamma(2.0, 0.5).is_erlang());
  REQUIRE(ServiceDistribution::gamma(2.0, 0.5).stages() == 2);
  REQUIRE(ServiceDistribution::gamma(1.0, 1.0).is_erlang());
  REQUIRE_FALSE(ServiceDistribution::gamma(2.5, 0.5).is_erlang());
  REQUIRE_FALSE(ServiceDistribution::deterministic(1.0).is_erlang());
  REQUIRE_THROWS_AS(ServiceDistribution::gamma(2.5, 0.5).stages(), std::invalid_argument);
}

TEST_CASE("parameter validation") {
  REQUIRE_THROWS_AS(ServiceDistribution::gamma(0.0, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(ServiceDistribution::gamma(1.0, -1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(ServiceDistribution::deterministic(0.0), std::invalid_argument);
  const auto d = ServiceDistribution::deterministic(1.0);
  REQUIRE_THROWS_AS(d.shape(), std::invalid_argument);
  const auto g = ServiceDistribution::gamma(1.0, 1.0);
  REQUIRE_THROWS_AS(g.value(), std::invalid_argument);
}

TEST_CASE("pdf point values") {
  const auto exp1 = ServiceDistribution::gamma(1.0, 1.0);
  REQUIRE(exp1.pdf(0.0) == Approx(1.0));
  REQUIRE(exp1.pdf(1.0) == Approx(std::exp(-1.0)).epsilon(1e-12));

  const auto g21 = ServiceDistribution::gamma(2.0, 1.0);
  REQUIRE(g21.pdf(0.0) == 0.0);
  REQUIRE(g21.pdf(1.0) == Approx(std::exp(-1.0)).epsilon(1e-12));

  const auto ghalf = ServiceDistribution::gamma(0.5, 1.0);
  REQUIRE(std::isinf(ghalf.pdf(0.0)));

  REQUIRE_THROWS_AS(exp1.pdf(-0.1), std::invalid_argument);
  REQUIRE_THROWS_AS(ServiceDistribution::deterministic(1.0).pdf(1.0),
                    std::invalid_argument);
}

TEST_CASE("pdf integrates to one") {
  for (auto [k, theta] :
       {std::pair{1.0, 1.0}, {2.0, 0.5}, {0.5, 2.0}, {3.5, 0.4}, {10.0, 0.1}}) {
    const auto d = ServiceDistribution::gamma(k, theta);
    const double total = oracle::integrate_to_inf([&](double s) { return d.pdf(s); });
    INFO("k=" << k << " theta=" << theta);
    REQUIRE(total == Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("sample moments match, integer shape (staged path)") {
  const auto d = ServiceDistribution::gamma(3.0, 1.0 / 3.0);
  const auto m = draw_moments(d, 1'000'000, 42);
  REQUIRE(std::abs(m.mean - 1.0) < 5.0 * m.se_mean);
  // Var(Gamma(3, 1/3)) = k*theta^2 = 1/3
  REQUIRE(std::abs(m.var - 1.0 / 3.0) < 5.0 * m.se_var);
  REQUIRE(std::abs(m.var - 1.0 / 3.0) < 0.01);
}

TEST_CASE("sample moments match, fractional shape (squeeze path)") {
  const auto d = ServiceDistribution::gamma(2.5, 0.8);
  const auto m = draw_moments(d, 1'000'000, 43);
  REQUIRE(std::abs(m.mean - 2.0) < 5.0 * m.se_mean);
  REQUIRE(std::abs(m.var - 2.5 * 0.64) < 5.0 * m.se_var);
}

TEST_CASE("sample moments match, shape below one (boost path)") {
  const auto d = ServiceDistribution::gamma(0.5, 1.0);
  const auto m = draw_moments(d, 1'000'000, 44);
  REQUIRE(std::abs(m.mean - 0.5) < 5.0 * m.se_mean);
  REQUIRE(std::abs(m.var - 0.5) < 5.0 * m.se_var);
}

TEST_CASE("large integer shape uses the squeeze path consistently") {
  const auto d = ServiceDistribution::gamma(100.0, 0.01);
  const auto m = draw_moments(d, 200'000, 45);
  REQUIRE(std::abs(m.mean - 1.0) < 5.0 * m.se_mean);
  REQUIRE(std::abs(m.var - 0.01) < 5.0 * m.se_var);
}

TEST_CASE("variance shrinks toward the deterministic limit at fixed mean") {
  std::vector<double> vars;
  for (double k : {1.0, 10.0, 100.0, 1000.0}) {
    const auto d = ServiceDistribution::gamma(k, 1.0 / k);
    vars.push_back(draw_moments(d, 100'000, 46).var);
  }
  for (std::size_t i = 1; i < vars.size(); ++i) REQUIRE(vars[i] < vars[i - 1]);
  REQUIRE(vars.back() < 0.0015);  // true variance 1e-3
}

TEST_CASE("sampling is deterministic per seed and stream") {
  const auto d = ServiceDistribution::gamma(2.0, 0.5);
  RngStream a(123), b(123);
  for (int i = 0; i < 100; ++i) REQUIRE(d.sample(a) == d.sample(b));

  RngStream s0(123, 0), s1(123, 1);
  int differs = 0;
  for (int i = 0; i < 100; ++i)
    if (d.sample(s0) != d.sample(s1)) ++differs;
  REQUIRE(differs > 90);
}

TEST_CASE("normal and exponential transforms are sane") {
  RngStream rng(7);
  RunningStats norm, expo;
  for (int i = 0; i < 100'000; ++i) {
    norm.add(rng.normal());
    expo.add(rng.exponential(2.0));
  }
  REQUIRE(std::abs(norm.mean()) < 5.0 * norm.se_mean());
  REQUIRE(norm.variance() == Approx(1.0).margin(0.03));
  REQUIRE(std::abs(expo.mean() - 0.5) < 5.0 * expo.se_mean());
}

TEST_CASE("conditional success distribution") {
  SECTION("closed form of the conditioned law") {
    const auto c = conditional_success_dist(2.0, 1.0, 1.0);
    REQUIRE(c.shape() == Approx(2.0));
    REQUIRE(c.scale() == Approx(0.5));
    // lambda = 0 recovers the unconditioned law
    const auto c0 = conditional_success_dist(1.0, 1.0, 0.0);
    REQUIRE(c0.scale() == Approx(1.0));
  }

  SECTION("mean matches k*theta/(1+lambda*theta) exactly") {
    for (double k : {1.0, 2.0, 5.5})
      for (double theta : {0.25, 1.0})
        for (double lambda : {0.0, 0.5, 3.0}) {
          const auto c = conditional_success_dist(k, theta, lambda);
          REQUIRE(c.mean() ==
                  Approx(k * theta / (1.0 + lambda * theta)).epsilon(1e-14));
        }
  }

  SECTION("rejection sampling agrees") {
    // Accept G ~ Gamma(2,1) only when it beats F ~ Exp(1); accepted samples
    // should look like Gamma(2, 0.5), mean 1.
    RngStream rng(99);
    const auto g = ServiceDistribution::gamma(2.0, 1.0);
    RunningStats accepted;
    for (int i = 0; i < 1'000'000; ++i) {
      const double gs = g.sample(rng);
      const double fs = rng.exponential(1.0);
      if (gs < fs) accepted.add(gs);
    }
    REQUIRE(accepted.count() > 100'000);
    REQUIRE(std::abs(accepted.mean() - 1.0) < 5.0 * accepted.se_mean());
    REQUIRE(std::abs(accepted.mean() - 1.0) < 0.01);
  }

  SECTION("validation") {
    REQUIRE_THROWS_AS(conditional_success_dist(0.0, 1.0, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(conditional_success_dist(1.0, 1.0, -0.5), std::invalid_argument);
  }
}

TEST_CASE("json round trip") {
  const auto g = ServiceDistribution::gamma(2.0, 0.5);
  const auto jg = g.to_json();
  REQUIRE(jg.at("kind") == "gamma");
  REQUIRE(jg.at("k") == 2.0);
  REQUIRE(jg.at("theta") == 0.5);
  REQUIRE(ServiceDistribution::from_json(jg) == g);

  const auto d = ServiceDistribution::deterministic(1.5);
  const auto jd = d.to_json();
  REQUIRE(jd.at("kind") == "deterministic");
  REQUIRE(jd.at("d") == 1.5);
  REQUIRE(ServiceDistribution::from_json(jd) == d);

  REQUIRE_THROWS_AS(ServiceDistribution::from_json({{"kind", "weibull"}}),
                    std::invalid_argument);
}
