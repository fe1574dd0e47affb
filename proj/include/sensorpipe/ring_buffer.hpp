#pragma once

// Fixed-capacity single-producer/single-consumer frame queue.
//
// The producer never blocks: pushing into a full queue evicts the oldest
// frame (one CAS on the read cursor, no retry) and bumps the overflow
// counter. The consumer copies a frame and then claims it with a CAS on the
// same cursor; if the producer evicted the frame meanwhile the copy is
// discarded and the consumer retries. Cursors are free-running 64-bit
// counters, so ABA cannot occur. Samples are stored as relaxed atomics so
// an evicted slot being rewritten while the consumer copies it is not a
// data race; the failed claim throws that copy away.

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>

namespace sensorpipe {

class RingBuffer {
 public:
  RingBuffer(std::size_t capacity_frames, std::size_t channels)
      : capacity_(capacity_frames),
        channels_(channels),
        samples_(std::make_unique<std::atomic<float>[]>(capacity_frames * channels)) {}

  RingBuffer(const RingBuffer&) = delete;
  RingBuffer& operator=(const RingBuffer&) = delete;

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t channels() const noexcept { return channels_; }

  // Producer only. Returns false when an unread frame was evicted.
  bool push(std::span<const float> frame) noexcept {
    const std::uint64_t w = write_.load(std::memory_order_relaxed);
    std::uint64_t r = read_.load(std::memory_order_acquire);
    bool kept_all = true;
    if (w - r >= capacity_) {
      // A failed CAS means the consumer just freed a slot.
      if (read_.compare_exchange_strong(r, r + 1, std::memory_order_acq_rel)) {
        overflows_.fetch_add(1, std::memory_order_relaxed);
        kept_all = false;
      }
    }
    std::atomic<float>* slot = samples_.get() + (w % capacity_) * channels_;
    for (std::size_t c = 0; c < channels_; ++c) slot[c].store(frame[c], std::memory_order_relaxed);
    write_.store(w + 1, std::memory_order_release);
    return kept_all;
  }

  // Consumer only. Copies the oldest frame into `frame`; false when empty.
  bool pop(std::span<float> frame) noexcept {
    for (;;) {
      std::uint64_t r = read_.load(std::memory_order_acquire);
      const std::uint64_t w = write_.load(std::memory_order_acquire);
      if (r == w) return false;
      const std::atomic<float>* slot = samples_.get() + (r % capacity_) * channels_;
      for (std::size_t c = 0; c < channels_; ++c)
        frame[c] = slot[c].load(std::memory_order_relaxed);
      if (read_.compare_exchange_strong(r, r + 1, std::memory_order_acq_rel)) return true;
    }
  }

  std::size_t size() const noexcept {
    const std::uint64_t w = write_.load(std::memory_order_acquire);
    const std::uint64_t r = read_.load(std::memory_order_acquire);
    return static_cast<std::size_t>(w - r);
  }

  std::uint64_t overflows() const noexcept { return overflows_.load(std::memory_order_relaxed); }

 private:
  const std::size_t capacity_;
  const std::size_t channels_;
  std::unique_ptr<std::atomic<float>[]> samples_;
  alignas(64) std::atomic<std::uint64_t> write_{0};
  alignas(64) std::atomic<std::uint64_t> read_{0};
  alignas(64) std::atomic<std::uint64_t> overflows_{0};
};

}  // namespace sensorpipe
