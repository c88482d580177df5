#pragma once

#include <cassert>
#include <functional>
#include <utility>

#include "medley/cas_cell.hpp"
#include "medley/tx_manager.hpp"

namespace medley {

/// Base class of every transactional structure.
///
/// Structures declare an OpStarter at the top of each public operation and
/// route critical accesses through CasCell::nbtcLoad / nbtcCompareExchange.
/// Outside a transaction every facility below degrades to its plain
/// nonblocking meaning.
class Composable {
 public:
  using Cell = CasCell;

  explicit Composable(TxManager& mgr) : mgr_(&mgr) {}

  TxManager& manager() const noexcept { return *mgr_; }

  class OpStarter {
   public:
    explicit OpStarter(TxManager& mgr)
        : ctx_(mgr.context()), outer_(detail::tlsContext), mgr_(mgr) {
      mgr_.reclaimer().enter();
      detail::tlsContext = &ctx_;
      ctx_.specInterval = false;
      ctx_.pendingReads.clear();
    }
    ~OpStarter() {
      detail::tlsContext = outer_;
      mgr_.reclaimer().exit();
    }
    OpStarter(const OpStarter&) = delete;
    OpStarter& operator=(const OpStarter&) = delete;

    OpMode mode() const noexcept {
      return ctx_.inTransaction ? OpMode::Transactional : OpMode::Standalone;
    }

   private:
    TxContext& ctx_;
    TxContext* outer_;
    TxManager& mgr_;
  };

 protected:
  /// Registers the most recent nbtcLoad of `cell` for commit-time validation.
  void addToReadSet(CasCell& cell, [[maybe_unused]] std::uint64_t value) {
    TxContext& ctx = mgr_->context();
    if (!ctx.inTransaction) return;
    const auto* pending = ctx.pendingFor(cell);
    if (pending == nullptr) {
      assert(!"addToReadSet without a prior nbtcLoad of the cell");
      return;
    }
    // Loads served from our own write set need no validation.
    if (pending->own) return;
    assert(pending->pair.value == value);
    ctx.descriptor->recordRead(cell, pending->pair);
  }

  /// Post-critical work: deferred to commit inside a transaction, run at
  /// once otherwise. Never run for an aborted transaction.
  void addToCleanups(std::function<void()> f) {
    TxContext& ctx = mgr_->context();
    if (ctx.inTransaction)
      ctx.cleanups.push_back(std::move(f));
    else
      f();
  }

  template <class T, class... Args>
  T* tNew(Args&&... args) {
    TxContext& ctx = mgr_->context();
    T* block = new T(std::forward<Args>(args)...);
    ctx.bump(ctx.allocs);
    if (ctx.inTransaction) {
      ctx.allocUndos.push_back([block, &ctx] {
        delete block;
        ctx.bump(ctx.frees);
      });
    }
    return block;
  }

  template <class T>
  void tDelete(T* block) {
    TxContext& ctx = mgr_->context();
    auto free = [block, &ctx] {
      delete block;
      ctx.bump(ctx.frees);
    };
    if (ctx.inTransaction)
      ctx.commitActions.push_back(std::move(free));
    else
      free();
  }

  template <class T>
  void tRetire(T* block) {
    TxContext& ctx = mgr_->context();
    if (ctx.inTransaction)
      ctx.commitActions.push_back([block, this] { mgr_->reclaimer().retire(block); });
    else
      mgr_->reclaimer().retire(block);
  }

  /// Retire a block this thread just unlinked. A speculative unlink only
  /// counts once the transaction commits; an applied one is final already.
  template <class T>
  void retireUnlinked(T* block, CasOutcome how) {
    if (how == CasOutcome::Speculated)
      tRetire(block);
    else
      mgr_->reclaimer().retire(block);
  }

  /// Free a block that never became reachable, outside any transaction
  /// bookkeeping (structure teardown).
  template <class T>
  void freeDirect(T* block) {
    TxContext& ctx = mgr_->context();
    delete block;
    ctx.bump(ctx.frees);
  }

  TxManager* mgr_;
};

/// The instrumented configuration used by the transformed structures.
struct MedleyPolicy {
  using Base = Composable;
  static constexpr const char* kName = "medley";
};

}  // namespace medley
