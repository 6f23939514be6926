#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace aoi {

// Compensated (Kahan) accumulator; keeps long age-area sums accurate.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

// Streaming mean/variance (Welford).
class RunningStats {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const {  // sample variance
    if (n_ < 2) return std::numeric_limits<double>::quiet_NaN();
    return m2_ / static_cast<double>(n_ - 1);
  }
  double stddev() const { return std::sqrt(variance()); }
  double se_mean() const { return std::sqrt(variance() / static_cast<double>(n_)); }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

namespace stats {

inline double mean(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean: empty sample");
  KahanSum s;
  for (double x : xs) s.add(x);
  return s.value() / static_cast<double>(xs.size());
}

inline double variance(const std::vector<double>& xs) {
  if (xs.size() < 2) throw std::invalid_argument("variance: need at least 2 samples");
  const double m = mean(xs);
  KahanSum s;
  for (double x : xs) s.add((x - m) * (x - m));
  return s.value() / static_cast<double>(xs.size() - 1);
}

inline double pearson_correlation(const std::vector<double>& a,
                                  const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("correlation: size mismatch");
  if (a.size() < 3) throw std::invalid_argument("correlation: need at least 3 pairs");
  const double ma = mean(a), mb = mean(b);
  KahanSum sab, saa, sbb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab.add(da * db);
    saa.add(da * da);
    sbb.add(db * db);
  }
  return sab.value() / std::sqrt(saa.value() * sbb.value());
}

// Fisher z-score for the hypothesis "true correlation is zero".
inline double correlation_zscore(double r, std::size_t n) {
  if (n < 4) throw std::invalid_argument("correlation_zscore: need n >= 4");
  return std::atanh(r) * std::sqrt(static_cast<double>(n) - 3.0);
}

// Kolmogorov survival function Q(x) = 2 * sum_{j>=1} (-1)^(j-1) exp(-2 j^2 x^2).
inline double kolmogorov_pvalue(double x) {
  if (x <= 0.0) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = std::exp(-2.0 * j * j * x * x);
    sum += sign * term;
    if (term < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
  std::size_t n = 0;
};

// One-sample Kolmogorov-Smirnov test against Exponential(rate), with the
// Stephens small-sample correction on the test statistic.
inline KsResult ks_test_exponential(std::vector<double> xs, double rate) {
  if (xs.empty()) throw std::invalid_argument("ks_test_exponential: empty sample");
  if (!(rate > 0.0)) throw std::invalid_argument("ks_test_exponential: rate must be > 0");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double cdf = -std::expm1(-rate * xs[i]);
    const double hi = (static_cast<double>(i) + 1.0) / n - cdf;
    const double lo = cdf - static_cast<double>(i) / n;
    d = std::max({d, hi, lo});
  }
  KsResult r;
  r.statistic = d;
  r.n = xs.size();
  const double sn = std::sqrt(n);
  r.p_value = kolmogorov_pvalue((sn + 0.12 + 0.11 / sn) * d);
  return r;
}

}  // namespace stats
}  // namespace aoi
