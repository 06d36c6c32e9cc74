#pragma once

#include <condition_variable>
#include <cstddef>
#include <mutex>
#include <optional>
#include <stop_token>

namespace airguard::pipeline {

/// Single-slot overwrite mailbox between two pipeline stages. A put() on a
/// full slot replaces the waiting value (latest wins), so occupancy never
/// exceeds one regardless of producer rate.
template <typename T>
class Mailbox {
 public:
  /// Returns true when an unconsumed value was overwritten.
  bool put(T value) {
    bool dropped;
    {
      std::lock_guard lock(mu_);
      dropped = slot_.has_value();
      slot_ = std::move(value);
      ++puts_;
      if (dropped) ++dropped_;
    }
    cv_.notify_one();
    return dropped;
  }

  std::optional<T> try_take() {
    std::lock_guard lock(mu_);
    std::optional<T> out = std::move(slot_);
    slot_.reset();
    return out;
  }

  /// Blocks until a value arrives or stop is requested (then returns nullopt).
  std::optional<T> take(std::stop_token st) {
    std::unique_lock lock(mu_);
    cv_.wait(lock, st, [this] { return slot_.has_value(); });
    if (!slot_) return std::nullopt;
    std::optional<T> out = std::move(slot_);
    slot_.reset();
    return out;
  }

  std::size_t occupancy() const {
    std::lock_guard lock(mu_);
    return slot_.has_value() ? 1 : 0;
  }
  std::size_t puts() const {
    std::lock_guard lock(mu_);
    return puts_;
  }
  std::size_t dropped() const {
    std::lock_guard lock(mu_);
    return dropped_;
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable_any cv_;
  std::optional<T> slot_;
  std::size_t puts_ = 0;
  std::size_t dropped_ = 0;
};

}  // namespace airguard::pipeline
