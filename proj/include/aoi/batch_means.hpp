#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace aoi {

// Streaming batch-means accumulator for steady-state standard errors.
// Per-delivery observations go into bounded micro-batches; when the table
// fills, adjacent micros are merged pairwise and the per-micro size doubles,
// so memory stays O(1) for any run length and the layout is deterministic.
// finalize() regroups the micros into the requested number of batches and
// computes each metric per batch, so the spread of the batch values estimates
// the Monte Carlo error without storing the event history.
class BatchMeans {
 public:
  void start_window(double t) {
    closed_.clear();
    current_ = Micro{};
    current_.t_begin = t;
    current_.t_end = t;
    micro_capacity_ = 64;
    started_ = true;
  }

  void record_arrival() {
    if (started_) ++current_.arrivals;
  }

  void record_drop() {
    if (started_) ++current_.drops;
  }

  // interdeparture < 0 means "first delivery in the window, no gap yet".
  void record_delivery(double t, double area_increment, double peak,
                       double system_time, double interdeparture) {
    if (!started_) return;
    ++current_.deliveries;
    current_.t_end = t;
    current_.area += area_increment;
    current_.peak_sum += peak;
    current_.system_time_sum += system_time;
    if (interdeparture >= 0.0) {
      ++current_.gaps;
      current_.gap_sum += interdeparture;
      current_.gap_sq_sum += interdeparture * interdeparture;
    }
    if (current_.deliveries >= micro_capacity_) {
      closed_.push_back(current_);
      current_ = Micro{};
      current_.t_begin = t;
      current_.t_end = t;
      if (closed_.size() >= kMaxMicros) compact();
    }
  }

  struct Estimate {
    double value = 0.0;
    double se = std::numeric_limits<double>::quiet_NaN();
  };

  struct Summary {
    Estimate avg_age;
    Estimate avg_peak;
    Estimate effective_rate;
    Estimate drop_fraction;
    Estimate mean_system_time;
    Estimate mean_interdeparture;
    Estimate second_moment_interdeparture;
    long deliveries = 0;
    long arrivals = 0;
    long drops = 0;
    double window_begin = 0.0;
    double window_end = 0.0;
    int batches_used = 0;
    bool reliable = false;
  };

  Summary finalize(int target_batches) const {
    if (target_batches < 2)
      throw std::invalid_argument("batch means: need at least 2 batches");
    std::vector<Micro> micros = closed_;
    if (current_.deliveries > 0 || current_.arrivals > 0) micros.push_back(current_);

    Summary s;
    if (!started_ || micros.empty()) return s;
    s.window_begin = micros.front().t_begin;
    s.window_end = micros.back().t_end;
    for (const Micro& m : micros) {
      s.deliveries += m.deliveries;
      s.arrivals += m.arrivals;
      s.drops += m.drops;
    }

    const int b = static_cast<int>(
        std::min<std::size_t>(micros.size(), static_cast<std::size_t>(target_batches)));
    std::vector<Micro> batches(static_cast<std::size_t>(b));
    for (int i = 0; i < b; ++i) {
      const std::size_t lo = micros.size() * static_cast<std::size_t>(i) / b;
      const std::size_t hi = micros.size() * (static_cast<std::size_t>(i) + 1) / b;
      Micro acc = micros[lo];
      for (std::size_t j = lo + 1; j < hi; ++j) acc = merge(acc, micros[j]);
      batches[static_cast<std::size_t>(i)] = acc;
    }
    s.batches_used = b;

    // Grand values from window totals; spreads from per-batch values.
    Micro total = batches.front();
    for (int i = 1; i < b; ++i) total = merge(total, batches[static_cast<std::size_t>(i)]);

    s.avg_age = combine(batches, total, [](const Micro& m) {
      const double span = m.t_end - m.t_begin;
      return span > 0.0 ? m.area / span : nan_();
    });
    s.avg_peak = combine(batches, total, [](const Micro& m) {
      return m.deliveries > 0 ? m.peak_sum / static_cast<double>(m.deliveries) : nan_();
    });
    s.effective_rate = combine(batches, total, [](const Micro& m) {
      const double span = m.t_end - m.t_begin;
      return span > 0.0 ? static_cast<double>(m.deliveries) / span : nan_();
    });
    s.drop_fraction = combine(batches, total, [](const Micro& m) {
      return m.arrivals > 0
                 ? 1.0 - static_cast<double>(m.deliveries) / static_cast<double>(m.arrivals)
                 : nan_();
    });
    s.mean_system_time = combine(batches, total, [](const Micro& m) {
      return m.deliveries > 0 ? m.system_time_sum / static_cast<double>(m.deliveries)
                              : nan_();
    });
    s.mean_interdeparture = combine(batches, total, [](const Micro& m) {
      return m.gaps > 0 ? m.gap_sum / static_cast<double>(m.gaps) : nan_();
    });
    s.second_moment_interdeparture = combine(batches, total, [](const Micro& m) {
      return m.gaps > 0 ? m.gap_sq_sum / static_cast<double>(m.gaps) : nan_();
    });

    s.reliable = b >= 2 && s.deliveries >= 2 * target_batches &&
                 s.window_end > s.window_begin && !std::isnan(s.avg_age.se);
    return s;
  }

 private:
  struct Micro {
    double t_begin = 0.0, t_end = 0.0;
    double area = 0.0, peak_sum = 0.0, system_time_sum = 0.0;
    double gap_sum = 0.0, gap_sq_sum = 0.0;
    long deliveries = 0, gaps = 0, arrivals = 0, drops = 0;
  };

  static double nan_() { return std::numeric_limits<double>::quiet_NaN(); }

  static Micro merge(const Micro& x, const Micro& y) {
    Micro m = x;
    m.t_end = y.t_end;
    m.area += y.area;
    m.peak_sum += y.peak_sum;
    m.system_time_sum += y.system_time_sum;
    m.gap_sum += y.gap_sum;
    m.gap_sq_sum += y.gap_sq_sum;
    m.deliveries += y.deliveries;
    m.gaps += y.gaps;
    m.arrivals += y.arrivals;
    m.drops += y.drops;
    return m;
  }

  template <class F>
  static Estimate combine(const std::vector<Micro>& batches, const Micro& total, F&& f) {
    Estimate e;
    e.value = f(total);
    const int b = static_cast<int>(batches.size());
    if (b < 2) return e;
    std::vector<double> vals;
    vals.reserve(batches.size());
    for (const Micro& m : batches) {
      const double v = f(m);
      if (!std::isnan(v)) vals.push_back(v);
    }
    if (vals.size() < 2) return e;
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    const double n = static_cast<double>(vals.size());
    e.se = std::sqrt(ss / (n - 1.0) / n);
    return e;
  }

  void compact() {
    std::vector<Micro> merged;
    merged.reserve(closed_.size() / 2 + 1);
    std::size_t i = 0;
    for (; i + 1 < closed_.size(); i += 2) merged.push_back(merge(closed_[i], closed_[i + 1]));
    if (i < closed_.size()) merged.push_back(closed_[i]);
    closed_ = std::move(merged);
    micro_capacity_ *= 2;
  }

  static constexpr std::size_t kMaxMicros = 512;
  std::vector<Micro> closed_;
  Micro current_;
  long micro_capacity_ = 64;
  bool started_ = false;
};

}  // namespace aoi
