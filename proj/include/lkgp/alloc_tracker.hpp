/*!
 * Copyright (c) 2026 LKGP contributors. All rights reserved.
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#ifndef LKGP_ALLOC_TRACKER_HPP
#define LKGP_ALLOC_TRACKER_HPP

#include <cstdint>

namespace lkgp::tracker {

// Counts bytes of the large matrix buffers allocated by the library.
// The benchmark harness uses the peak to check asymptotic memory claims,
// so only buffers whose size scales with the problem are registered.
void add(std::int64_t bytes);
std::int64_t current_bytes();
std::int64_t peak_bytes();
void reset();

// Registers a buffer for its lifetime.
class TrackedBytes {
 public:
  TrackedBytes() noexcept = default;
  explicit TrackedBytes(std::int64_t bytes);
  TrackedBytes(const TrackedBytes& other);
  TrackedBytes& operator=(const TrackedBytes& other);
  TrackedBytes(TrackedBytes&& other) noexcept;
  TrackedBytes& operator=(TrackedBytes&& other) noexcept;
  ~TrackedBytes();

  std::int64_t bytes() const noexcept { return bytes_; }

 private:
  std::int64_t bytes_ = 0;
};

}  // namespace lkgp::tracker

#endif  // LKGP_ALLOC_TRACKER_HPP
