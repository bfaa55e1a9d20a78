// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamtts/clock.hpp"

#include <thread>

namespace streamtts {

std::int64_t SteadyClock::now_ns() const {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - origin_).count();
}

void SteadyClock::wait_ns(std::int64_t ns) {
  if (ns > 0) std::this_thread::sleep_for(std::chrono::nanoseconds(ns));
}

void SteadyClock::wait_until_ns(std::int64_t deadline_ns) {
  std::this_thread::sleep_until(origin_ + std::chrono::nanoseconds(deadline_ns));
}

}  // namespace streamtts
