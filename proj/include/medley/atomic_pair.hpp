#pragma once

#include <atomic>
#include <cstdint>

#if !defined(__x86_64__) || !defined(__GCC_HAVE_SYNC_COMPARE_AND_SWAP_16)
#error "medley requires x86-64 with cmpxchg16b (compile with -mcx16)"
#endif

namespace medley {

/// A (value, counter) pair as observed in one atomic snapshot.
struct Pair {
  std::uint64_t value = 0;
  std::uint64_t counter = 0;

  friend bool operator==(const Pair&, const Pair&) = default;
};

/// Two 64-bit words updated together by a double-width compare-exchange.
///
/// Every mutation must change the counter half; `load()` relies on that to
/// take a consistent snapshot from two 64-bit reads without a locked
/// instruction.
class alignas(16) AtomicPair {
 public:
  constexpr AtomicPair() = default;
  constexpr explicit AtomicPair(Pair initial)
      : value_(initial.value), counter_(initial.counter) {}

  AtomicPair(const AtomicPair&) = delete;
  AtomicPair& operator=(const AtomicPair&) = delete;

  Pair load() const noexcept {
    for (;;) {
      const std::uint64_t before = counterRef().load(std::memory_order_acquire);
      const std::uint64_t value = valueRef().load(std::memory_order_acquire);
      const std::uint64_t after = counterRef().load(std::memory_order_acquire);
      if (before == after) return {value, before};
    }
  }

  bool compareExchange(Pair expected, Pair desired) noexcept {
    return __sync_bool_compare_and_swap(raw(), pack(expected), pack(desired));
  }

  /// Non-atomic initialisation; only valid before the pair is shared.
  void init(Pair p) noexcept {
    value_ = p.value;
    counter_ = p.counter;
  }

 private:
  using Wide = unsigned __int128;

  static Wide pack(Pair p) noexcept {
    return (static_cast<Wide>(p.counter) << 64) | p.value;
  }

  Wide* raw() noexcept { return reinterpret_cast<Wide*>(&value_); }

  std::atomic_ref<std::uint64_t> valueRef() const noexcept {
    return std::atomic_ref<std::uint64_t>(const_cast<std::uint64_t&>(value_));
  }
  std::atomic_ref<std::uint64_t> counterRef() const noexcept {
    return std::atomic_ref<std::uint64_t>(const_cast<std::uint64_t&>(counter_));
  }

  // Little-endian: value is the low half, counter the high half.
  std::uint64_t value_ = 0;
  std::uint64_t counter_ = 0;
};

static_assert(sizeof(AtomicPair) == 16);

}  // namespace medley
