#pragma once

// Single-writer/single-reader publication of fixed-size float windows.
//
// Three slots: the writer owns one (back), the reader owns one (front) and
// the third sits in an atomic "middle" word together with a fresh bit.
// Publishing swaps back with middle; acquiring swaps front with middle when
// the fresh bit is set. Neither side ever touches the slot the other owns,
// so a reader sees one complete window or the previous complete window.

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace sensorpipe {

class TripleBuffer {
 public:
  explicit TripleBuffer(std::size_t window) : window_(window), storage_(3 * window, 0.0f) {}

  TripleBuffer(const TripleBuffer&) = delete;
  TripleBuffer& operator=(const TripleBuffer&) = delete;

  std::size_t window() const noexcept { return window_; }

  // Writer side: fill back(), then publish().
  std::span<float> back() noexcept { return slot(back_); }
  void publish() noexcept {
    const std::uint32_t old = middle_.exchange(back_ | kFresh, std::memory_order_acq_rel);
    back_ = old & kIndexMask;
    published_.fetch_add(1, std::memory_order_release);
  }

  // Reader side. Returns true when a newer window replaced front().
  bool acquire() noexcept {
    if ((middle_.load(std::memory_order_acquire) & kFresh) == 0) return false;
    const std::uint32_t old = middle_.exchange(front_, std::memory_order_acq_rel);
    front_ = old & kIndexMask;
    has_front_ = true;
    return true;
  }
  std::span<const float> front() const noexcept { return slot(front_); }
  bool has_front() const noexcept { return has_front_; }

  std::uint64_t published() const noexcept { return published_.load(std::memory_order_acquire); }

 private:
  static constexpr std::uint32_t kFresh = 0x4;
  static constexpr std::uint32_t kIndexMask = 0x3;

  std::span<float> slot(std::uint32_t i) noexcept { return {storage_.data() + i * window_, window_}; }
  std::span<const float> slot(std::uint32_t i) const noexcept {
    return {storage_.data() + i * window_, window_};
  }

  const std::size_t window_;
  std::vector<float> storage_;
  std::uint32_t back_ = 0;   // writer-owned
  std::uint32_t front_ = 1;  // reader-owned
  bool has_front_ = false;   // reader-owned
  alignas(64) std::atomic<std::uint32_t> middle_{2};
  alignas(64) std::atomic<std::uint64_t> published_{0};
};

}  // namespace sensorpipe
