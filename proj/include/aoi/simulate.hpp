#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "aoi/analytic.hpp"
#include "aoi/batch_means.hpp"
#include "aoi/rng.hpp"
#include "aoi/stats.hpp"

namespace aoi {

// Saw-tooth bookkeeping for the instantaneous age t - u(t), where u(t) is the
// generation time of the freshest delivered packet.  Area is accumulated per
// delivery as a trapezoid (the age is piecewise linear with unit slope), with
// compensated summation.
class AgeTracker {
 public:
  explicit AgeTracker(double start_time = 0.0, double initial_age = 0.0)
      : freshest_gen_(start_time - initial_age),
        last_delivery_(start_time),
        window_begin_(start_time) {
    if (initial_age < 0.0) throw std::invalid_argument("initial age must be >= 0");
  }

  double age_at(double t) const { return t - freshest_gen_; }

  struct DeliveryObservation {
    double area_increment = 0.0;  // area under the age curve since the last delivery
    double peak = 0.0;            // age immediately before this delivery
  };

  // Delivery at time t of a packet generated at gen.  Under LCFS a delivered
  // packet is always fresher than the previous one; a violation means the
  // caller's queue bookkeeping is broken.
  DeliveryObservation observe_delivery(double t, double gen) {
    if (!(gen > freshest_gen_))
      throw std::logic_error("delivery is staler than the current age baseline");
    if (t < last_delivery_) throw std::logic_error("event times must be nondecreasing");
    if (gen > t) throw std::logic_error("packet delivered before it was generated");
    const double dt = t - last_delivery_;
    DeliveryObservation obs;
    obs.peak = t - freshest_gen_;
    obs.area_increment = (last_delivery_ - freshest_gen_) * dt + 0.5 * dt * dt;
    area_.add(obs.area_increment);
    peak_sum_.add(obs.peak);
    ++deliveries_;
    freshest_gen_ = gen;
    last_delivery_ = t;
    return obs;
  }

  // Restart accumulation at time t; the instantaneous age is preserved.
  void reset_window(double t) {
    if (t < last_delivery_) throw std::logic_error("cannot reset the window into the past");
    area_ = KahanSum{};
    peak_sum_ = KahanSum{};
    deliveries_ = 0;
    window_begin_ = t;
    last_delivery_ = t;
  }

  double area() const { return area_.value(); }
  double elapsed() const { return last_delivery_ - window_begin_; }
  long deliveries() const { return deliveries_; }
  double mean_peak() const {
    return deliveries_ > 0 ? peak_sum_.value() / static_cast<double>(deliveries_)
                           : std::numeric_limits<double>::quiet_NaN();
  }
  double mean_age() const {
    return elapsed() > 0.0 ? area_.value() / elapsed()
                           : std::numeric_limits<double>::quiet_NaN();
  }

 private:
  KahanSum area_;
  KahanSum peak_sum_;
  long deliveries_ = 0;
  double freshest_gen_;
  double last_delivery_;
  double window_begin_;
};

// Single LCFS server with an optional one-slot buffer.  Service draws are
// supplied by the caller at the moment a service actually starts; packets
// that are dropped never consume a draw.
struct LcfsServer {
  bool busy = false;
  double serving_gen = 0.0;
  double completion_time = std::numeric_limits<double>::infinity();
  bool has_buffered = false;
  double buffered_gen = 0.0;

  // Preemptive arrival: the newcomer always takes the server.  Returns the
  // generation time of the packet it evicted, if any.
  template <class DrawFn>
  std::optional<double> arrival_preempt(double t, DrawFn&& draw) {
    std::optional<double> dropped;
    if (busy) dropped = serving_gen;
    busy = true;
    serving_gen = t;
    completion_time = t + draw();
    return dropped;
  }

  // Non-preemptive arrival: service in progress is never disturbed; the
  // newcomer takes the buffer slot, displacing any packet waiting there.
  template <class DrawFn>
  std::optional<double> arrival_nopreempt(double t, DrawFn&& draw) {
    if (!busy) {
      busy = true;
      serving_gen = t;
      completion_time = t + draw();
      return std::nullopt;
    }
    std::optional<double> dropped;
    if (has_buffered) dropped = buffered_gen;
    has_buffered = true;
    buffered_gen = t;
    return dropped;
  }

  // Service completion at t == completion_time.  Returns the delivered
  // packet's generation time; a buffered packet (non-preemptive scheme)
  // starts service at the same instant with a fresh draw.
  template <class DrawFn>
  double complete(double t, DrawFn&& draw) {
    if (!busy) throw std::logic_error("service completion with an idle server");
    const double gen = serving_gen;
    if (has_buffered) {
      serving_gen = buffered_gen;
      has_buffered = false;
      completion_time = t + draw();
    } else {
      busy = false;
      completion_time = std::numeric_limits<double>::infinity();
    }
    return gen;
  }

  bool queue_empty() const { return !busy; }
};

struct SimConfig {
  SystemParams params;
  std::uint64_t seed = 1;
  long horizon = 2'000'000;  // packets generated
  long warmup = 10'000;      // delivered packets discarded before measuring
  int batches = 20;
  double initial_age = 0.0;

  void validate() const {
    params.validate();
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1 packet");
    if (horizon > 50'000'000)
      throw std::invalid_argument("horizon above 5e7 packets is not supported");
    if (warmup < 0) throw std::invalid_argument("warmup must be >= 0");
    if (warmup >= horizon) throw std::invalid_argument("warmup must be below the horizon");
    if (batches < 2) throw std::invalid_argument("need at least 2 batches");
    if (initial_age < 0.0) throw std::invalid_argument("initial age must be >= 0");
  }
};

// Paired steady-state samples, one entry per post-warmup delivery (capped).
// system_time[i] and interdeparture[i] belong to the same delivery cycle, so
// the pair supports correlation checks.  residual_interarrival holds, for
// deliveries that left the system empty, the wait until the next generation.
struct SampleSet {
  std::size_t capacity = 100'000;
  std::vector<double> system_time;
  std::vector<double> interdeparture;
  std::vector<double> residual_interarrival;
};

enum class SimEventKind { Arrival, Drop, Delivery };

struct TraceEvent {
  double time = 0.0;
  SimEventKind kind = SimEventKind::Arrival;
  double gen_time = 0.0;
};

using TraceSink = std::function<void(const TraceEvent&)>;

struct SimReport {
  double avg_age = 0.0;
  double avg_peak = 0.0;
  double effective_rate = 0.0;
  double drop_fraction = 0.0;
  double mean_system_time = 0.0;
  double mean_interdeparture = 0.0;
  double second_moment_interdeparture = 0.0;

  double avg_age_se = std::numeric_limits<double>::quiet_NaN();
  double avg_peak_se = std::numeric_limits<double>::quiet_NaN();
  double effective_rate_se = std::numeric_limits<double>::quiet_NaN();
  double drop_fraction_se = std::numeric_limits<double>::quiet_NaN();
  double mean_system_time_se = std::numeric_limits<double>::quiet_NaN();
  double mean_interdeparture_se = std::numeric_limits<double>::quiet_NaN();
  double second_moment_interdeparture_se = std::numeric_limits<double>::quiet_NaN();

  long n_generated = 0;   // whole run
  long n_delivered = 0;   // whole run
  long window_arrivals = 0;
  long window_deliveries = 0;
  long window_drops = 0;
  double window_begin = 0.0;
  double window_end = 0.0;
  int batches_used = 0;
  bool reliable = false;
  std::uint64_t seed = 0;
};

// Event-driven run.  Only two future events can exist at a time (next
// generation, pending completion), so no event queue is needed.  Ties are
// resolved completion-first.  Draw order is fixed: when an arrival is
// processed, the next interarrival gap is drawn first, then the service draw
// if a service starts, so runs are reproducible by seed alone.
inline SimReport run(const SimConfig& cfg, SampleSet* samples = nullptr,
                     const TraceSink& trace = {}) {
  cfg.validate();
  RngStream rng(cfg.seed);
  const double lambda = cfg.params.lambda;
  const ServiceDistribution svc = cfg.params.service;
  const bool preempt = cfg.params.scheme == Scheme::LcfsPreempt;
  auto draw_service = [&]() { return svc.sample(rng); };

  LcfsServer server;
  AgeTracker tracker(0.0, cfg.initial_age);
  BatchMeans batches;

  long generated = 0, delivered = 0;
  bool in_window = cfg.warmup == 0;
  if (in_window) batches.start_window(0.0);

  double next_arrival = rng.exponential(lambda);
  bool have_prev_delivery = false;
  double prev_delivery_time = 0.0;
  double prev_system_time = 0.0;

  while (true) {
    const bool arrival_pending = generated < cfg.horizon;
    if (!server.busy && !arrival_pending) break;

    if (server.busy && (!arrival_pending || server.completion_time <= next_arrival)) {
      const double t = server.completion_time;
      const double gen = server.complete(t, draw_service);
      const auto obs = tracker.observe_delivery(t, gen);
      ++delivered;
      if (trace) trace({t, SimEventKind::Delivery, gen});
      if (in_window) {
        const double system_time = t - gen;
        const double gap = have_prev_delivery ? t - prev_delivery_time : -1.0;
        batches.record_delivery(t, obs.area_increment, obs.peak, system_time, gap);
        if (samples) {
          if (have_prev_delivery && samples->system_time.size() < samples->capacity) {
            samples->system_time.push_back(prev_system_time);
            samples->interdeparture.push_back(gap);
          }
          if (server.queue_empty() && arrival_pending &&
              samples->residual_interarrival.size() < samples->capacity)
            samples->residual_interarrival.push_back(next_arrival - t);
        }
        have_prev_delivery = true;
        prev_delivery_time = t;
        prev_system_time = t - gen;
      } else if (delivered == cfg.warmup) {
        tracker.reset_window(t);
        batches.start_window(t);
        in_window = true;
        have_prev_delivery = true;  // the boundary delivery anchors the first gap
        prev_delivery_time = t;
        prev_system_time = t - gen;
      }
    } else {
      const double t = next_arrival;
      ++generated;
      if (trace) trace({t, SimEventKind::Arrival, t});
      if (in_window) batches.record_arrival();
      next_arrival = t + rng.exponential(lambda);
      const std::optional<double> dropped =
          preempt ? server.arrival_preempt(t, draw_service)
                  : server.arrival_nopreempt(t, draw_service);
      if (dropped) {
        if (trace) trace({t, SimEventKind::Drop, *dropped});
        if (in_window) batches.record_drop();
      }
    }
  }

  const BatchMeans::Summary s = batches.finalize(cfg.batches);
  SimReport r;
  r.seed = cfg.seed;
  r.n_generated = generated;
  r.n_delivered = delivered;
  r.window_arrivals = s.arrivals;
  r.window_deliveries = s.deliveries;
  r.window_drops = s.drops;
  r.window_begin = s.window_begin;
  r.window_end = s.window_end;
  r.batches_used = s.batches_used;
  r.reliable = in_window && s.reliable;

  // Grand values from the tracker (compensated sums); spreads from batches.
  if (in_window && tracker.elapsed() > 0.0) {
    r.avg_age = tracker.mean_age();
    r.avg_peak = tracker.mean_peak();
    r.effective_rate = static_cast<double>(s.deliveries) / tracker.elapsed();
    r.drop_fraction =
        s.arrivals > 0
            ? 1.0 - static_cast<double>(s.deliveries) / static_cast<double>(s.arrivals)
            : std::numeric_limits<double>::quiet_NaN();
    r.mean_system_time = s.mean_system_time.value;
    r.mean_interdeparture = s.mean_interdeparture.value;
    r.second_moment_interdeparture = s.second_moment_interdeparture.value;
    r.avg_age_se = s.avg_age.se;
    r.avg_peak_se = s.avg_peak.se;
    r.effective_rate_se = s.effective_rate.se;
    r.drop_fraction_se = s.drop_fraction.se;
    r.mean_system_time_se = s.mean_system_time.se;
    r.mean_interdeparture_se = s.mean_interdeparture.se;
    r.second_moment_interdeparture_se = s.second_moment_interdeparture.se;
  }
  return r;
}

}  // namespace aoi
