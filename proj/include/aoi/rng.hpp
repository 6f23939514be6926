#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace aoi {

// splitmix64 finalizer (Vigna). Spreads user-chosen seeds and derives
// sub-stream seeds that are well separated even for adjacent inputs.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic random stream. The engine is std::mt19937_64 (fully specified
// by the standard), and every variate transform is implemented locally, so a
// given (seed, stream_id) pair produces the same sequence on any platform.
// std::*_distribution is deliberately avoided: its output is
// implementation-defined and would break run-to-run reproducibility across
// toolchains.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  // Independent sub-stream id under the same user seed.
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : engine_(splitmix64(splitmix64(seed) ^
                           splitmix64(stream_id + 0x9e3779b97f4a7c15ULL))) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0,1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0,1]; safe to pass to log().
  double uniform_pos() { return 1.0 - uniform(); }

  double exponential(double rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate must be > 0");
    return -std::log(uniform_pos()) / rate;
  }

  // Standard normal via Box-Muller. One variate per call, nothing cached, so
  // the draw count per sample is fixed.
  double normal() {
    const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    return r * std::cos(2.0 * pi_ * uniform());
  }

  // Gamma(shape, scale) variate. Method is selected by shape alone:
  //   - integer shape <= 32: sum of `shape` unit exponentials
  //   - shape >= 1:          Marsaglia & Tsang (2000) squeeze/accept-reject
  //   - shape < 1:           draw Gamma(shape+1) and scale by u^(1/shape)
  // Keeping the method a pure function of shape keeps sequences reproducible.
  double gamma(double shape, double scale) {
    if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be > 0");
    if (!(scale > 0.0)) throw std::invalid_argument("gamma: scale must be > 0");
    const double n = std::floor(shape);
    if (n == shape && shape <= 32.0) {
      double acc = 0.0;
      for (int i = 0; i < static_cast<int>(n); ++i) acc += -std::log(uniform_pos());
      return acc * scale;
    }
    if (shape < 1.0) {
      const double boost = std::pow(uniform_pos(), 1.0 / shape);
      return marsaglia_tsang(shape + 1.0) * boost * scale;
    }
    return marsaglia_tsang(shape) * scale;
  }

 private:
  double marsaglia_tsang(double shape) {
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      const double x = normal();
      const double t = 1.0 + c * x;
      if (t <= 0.0) continue;
      const double v = t * t * t;
      const double u = uniform_pos();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  static constexpr double pi_ = 3.141592653589793238462643383279502884;
  std::mt19937_64 engine_;
};

}  // namespace aoi
