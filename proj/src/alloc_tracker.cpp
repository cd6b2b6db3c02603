/*!
 * Copyright (c) 2026 LKGP contributors. All rights reserved.
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#include "lkgp/alloc_tracker.hpp"

#include <atomic>

namespace lkgp::tracker {

namespace {
std::atomic<std::int64_t> g_current{0};
std::atomic<std::int64_t> g_peak{0};
}  // namespace

void add(std::int64_t bytes) {
  const std::int64_t now = g_current.fetch_add(bytes) + bytes;
  if (bytes > 0) {
    std::int64_t prev = g_peak.load();
    while (now > prev && !g_peak.compare_exchange_weak(prev, now)) {
    }
  }
}

std::int64_t current_bytes() { return g_current.load(); }
std::int64_t peak_bytes() { return g_peak.load(); }

void reset() {
  g_current.store(0);
  g_peak.store(0);
}

TrackedBytes::TrackedBytes(std::int64_t bytes) : bytes_(bytes) { add(bytes_); }

TrackedBytes::TrackedBytes(const TrackedBytes& other) : bytes_(other.bytes_) {
  add(bytes_);
}

TrackedBytes& TrackedBytes::operator=(const TrackedBytes& other) {
  if (this != &other) {
    add(other.bytes_ - bytes_);
    bytes_ = other.bytes_;
  }
  return *this;
}

TrackedBytes::TrackedBytes(TrackedBytes&& other) noexcept : bytes_(other.bytes_) {
  other.bytes_ = 0;
}

TrackedBytes& TrackedBytes::operator=(TrackedBytes&& other) noexcept {
  if (this != &other) {
    add(-bytes_);
    bytes_ = other.bytes_;
    other.bytes_ = 0;
  }
  return *this;
}

TrackedBytes::~TrackedBytes() { add(-bytes_); }

}  // namespace lkgp::tracker
