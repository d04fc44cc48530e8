#pragma once

#include <atomic>

#include "livek/core/time.hpp"

namespace livek {

class Clock {
 public:
  virtual ~Clock() = default;
  virtual TimePoint now() const = 0;
};

class SystemClock final : public Clock {
 public:
  TimePoint now() const override {
    return std::chrono::time_point_cast<Duration>(
        std::chrono::system_clock::now());
  }
};

// Externally driven clock for tests and simulated-time replay.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(TimePoint start = TimePoint{}) : now_(to_epoch(start)) {}

  TimePoint now() const override {
    return from_epoch(now_.load(std::memory_order_acquire));
  }
  void set(TimePoint t) { now_.store(to_epoch(t), std::memory_order_release); }
  void advance(Duration d) {
    now_.fetch_add(d.count(), std::memory_order_acq_rel);
  }
  // Moves forward only; used to follow event time.
  void advance_to(TimePoint t) {
    auto target = to_epoch(t);
    auto cur = now_.load(std::memory_order_acquire);
    while (cur < target &&
           !now_.compare_exchange_weak(cur, target, std::memory_order_acq_rel)) {
    }
  }

 private:
  std::atomic<std::int64_t> now_;
};

}  // namespace livek
