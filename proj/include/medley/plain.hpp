#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <utility>

#include "medley/cas_cell.hpp"
#include "medley/tx_manager.hpp"

namespace medley {

/// Single-word cell with the CasCell interface and none of its metadata.
/// Backs the untransformed baseline structures.
class PlainCell {
 public:
  constexpr PlainCell() = default;
  constexpr explicit PlainCell(std::uint64_t v) : word_(v) {}
  PlainCell(const PlainCell&) = delete;
  PlainCell& operator=(const PlainCell&) = delete;

  void init(std::uint64_t v) noexcept { word_.store(v, std::memory_order_relaxed); }
  std::uint64_t load() const noexcept { return word_.load(std::memory_order_acquire); }
  void store(std::uint64_t v) noexcept { word_.store(v, std::memory_order_release); }
  bool cas(std::uint64_t expected, std::uint64_t desired) noexcept {
    return word_.compare_exchange_strong(expected, desired, std::memory_order_acq_rel);
  }
  std::uint64_t nbtcLoad() const noexcept { return load(); }
  CasOutcome nbtcCompareExchange(std::uint64_t expected, std::uint64_t desired, bool, bool) noexcept {
    return cas(expected, desired) ? CasOutcome::Applied : CasOutcome::Failed;
  }
  bool nbtcCas(std::uint64_t expected, std::uint64_t desired, bool, bool) noexcept {
    return cas(expected, desired);
  }

 private:
  std::atomic<std::uint64_t> word_{0};
};

/// Composable facade that only does epoch-based reclamation: the original
/// nonblocking algorithm with every transactional hook compiled away.
class PlainComposable {
 public:
  using Cell = PlainCell;

  explicit PlainComposable(TxManager& mgr) : mgr_(&mgr) {}

  TxManager& manager() const noexcept { return *mgr_; }

  class OpStarter {
   public:
    explicit OpStarter(TxManager& mgr) : guard_(mgr.reclaimer()) {}
    OpMode mode() const noexcept { return OpMode::Standalone; }

   private:
    EpochGuard guard_;
  };

 protected:
  void addToReadSet(PlainCell&, std::uint64_t) noexcept {}
  template <class F>
  void addToCleanups(F&& f) {
    std::forward<F>(f)();
  }
  template <class T, class... Args>
  T* tNew(Args&&... args) {
    TxContext& ctx = mgr_->context();
    ctx.bump(ctx.allocs);
    return new T(std::forward<Args>(args)...);
  }
  template <class T>
  void tDelete(T* block) {
    freeDirect(block);
  }
  template <class T>
  void tRetire(T* block) {
    mgr_->reclaimer().retire(block);
  }
  template <class T>
  void retireUnlinked(T* block, CasOutcome) {
    mgr_->reclaimer().retire(block);
  }
  template <class T>
  void freeDirect(T* block) {
    TxContext& ctx = mgr_->context();
    delete block;
    ctx.bump(ctx.frees);
  }

  TxManager* mgr_;
};

struct PlainPolicy {
  using Base = PlainComposable;
  static constexpr const char* kName = "original";
};

}  // namespace medley
