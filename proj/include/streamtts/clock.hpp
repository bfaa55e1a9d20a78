// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>

namespace streamtts {

// Injected time source. Latency math reads time only through this.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ns() const = 0;
  // Let `ns` elapse: the simulated clock jumps, the real clock sleeps.
  virtual void wait_ns(std::int64_t ns) = 0;
  virtual void wait_until_ns(std::int64_t deadline_ns) = 0;
};

class SimulatedClock final : public Clock {
 public:
  std::int64_t now_ns() const override { return now_; }
  void wait_ns(std::int64_t ns) override {
    if (ns > 0) now_ += ns;
  }
  void wait_until_ns(std::int64_t deadline_ns) override {
    if (deadline_ns > now_) now_ = deadline_ns;
  }

 private:
  std::int64_t now_ = 0;
};

// Monotonic wall clock; times are relative to construction.
class SteadyClock final : public Clock {
 public:
  SteadyClock() : origin_(std::chrono::steady_clock::now()) {}
  std::int64_t now_ns() const override;
  void wait_ns(std::int64_t ns) override;
  void wait_until_ns(std::int64_t deadline_ns) override;

 private:
  std::chrono::steady_clock::time_point origin_;
};

}  // namespace streamtts
