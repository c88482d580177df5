#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <vector>

namespace medley {

/// Epoch-based safe memory reclamation.
///
/// Threads announce the global epoch on entering a critical region. A block
/// retired at epoch r is freed once every thread still inside a region has
/// announced an epoch greater than r.
class EpochReclaimer {
 public:
  static constexpr std::uint64_t kIdle = ~std::uint64_t{0};
  static constexpr std::uint32_t kDefaultCadence = 4096;

  /// `cadence` = operations per thread between epoch advances; 0 reads
  /// MEDLEY_EPOCH_CADENCE from the environment (default 4096).
  explicit EpochReclaimer(std::uint32_t cadence = 0);
  ~EpochReclaimer();

  EpochReclaimer(const EpochReclaimer&) = delete;
  EpochReclaimer& operator=(const EpochReclaimer&) = delete;

  /// Region entry/exit for the calling thread. Nested calls are counted.
  void enter();
  void exit();
  bool inRegion() const;

  template <class T>
  void retire(T* block) {
    retireRaw(block, [](void* p) { delete static_cast<T*>(p); });
  }
  void retireRaw(void* block, void (*deleter)(void*));

  /// Advances the epoch and frees every safely old block of every thread.
  std::size_t collect();

  std::uint64_t epoch() const noexcept { return epoch_.load(std::memory_order_acquire); }
  std::uint32_t cadence() const noexcept { return cadence_; }
  std::size_t pending() const;
  std::uint64_t retiredTotal() const noexcept { return retired_.load(std::memory_order_relaxed); }
  std::uint64_t freedTotal() const noexcept { return freed_.load(std::memory_order_relaxed); }

  static std::uint32_t cadenceFromEnvironment();

 private:
  struct Retired {
    void* block;
    void (*deleter)(void*);
    std::uint64_t epoch;
  };

  struct alignas(64) Slot {
    std::atomic<std::uint64_t> announce{kIdle};
    unsigned depth = 0;
    std::uint32_t opsSinceAdvance = 0;
    mutable std::mutex lock;
    std::vector<Retired> retired;
  };

  Slot& localSlot();
  std::uint64_t oldestAnnounced() const;
  std::size_t collectSlot(Slot& s, std::uint64_t safeBelow);

  const std::uint32_t cadence_;
  std::atomic<std::uint64_t> epoch_{1};
  std::atomic<std::uint64_t> retired_{0};
  std::atomic<std::uint64_t> freed_{0};
  std::unique_ptr<std::atomic<Slot*>[]> slots_;
};

/// RAII region guard.
class EpochGuard {
 public:
  explicit EpochGuard(EpochReclaimer& r) : r_(r) { r_.enter(); }
  ~EpochGuard() { r_.exit(); }
  EpochGuard(const EpochGuard&) = delete;
  EpochGuard& operator=(const EpochGuard&) = delete;

 private:
  EpochReclaimer& r_;
};

}  // namespace medley
