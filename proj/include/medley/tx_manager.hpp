#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <vector>

#include "medley/cas_cell.hpp"
#include "medley/descriptor.hpp"
#include "medley/epoch_reclaimer.hpp"

namespace medley {

struct TransactionAborted : std::exception {
  const char* what() const noexcept override { return "medley: transaction aborted"; }
};

enum class OpMode : std::uint8_t { Standalone, Transactional };

class TxManager;

/// Per-thread transaction lifecycle state. Never shared between threads.
struct TxContext {
  struct PendingRead {
    const CasCell* cell;
    Pair pair;
    bool own;  // served from this transaction's own write set
  };

  TxManager* manager = nullptr;
  Descriptor* descriptor = nullptr;
  bool inTransaction = false;
  bool specInterval = false;
  TxContext* outerContext = nullptr;  // thread's context before txBegin
  std::vector<PendingRead> pendingReads;
  std::vector<std::function<void()>> cleanups;
  std::vector<std::function<void()>> allocUndos;
  std::vector<std::function<void()>> commitActions;  // deferred tDelete / tRetire

  // Owner-written, read by anyone summing counters.
  std::atomic<std::uint64_t> allocs{0};
  std::atomic<std::uint64_t> frees{0};
  std::atomic<std::uint64_t> commits{0};
  std::atomic<std::uint64_t> aborts{0};
  std::uint64_t lastCommitStamp = 0;

  void bump(std::atomic<std::uint64_t>& c, std::uint64_t by = 1) noexcept {
    c.store(c.load(std::memory_order_relaxed) + by, std::memory_order_relaxed);
  }
  void bufferRead(const CasCell& cell, Pair p, bool own) {
    pendingReads.push_back({&cell, p, own});
  }
  const PendingRead* pendingFor(const CasCell& cell) const noexcept {
    for (auto it = pendingReads.rbegin(); it != pendingReads.rend(); ++it)
      if (it->cell == &cell) return &*it;
    return nullptr;
  }
};

namespace detail {
extern thread_local TxContext* tlsContext;
}

/// The operation context of the calling thread, if it is inside an
/// operation started on some TxManager.
inline TxContext* currentContext() noexcept { return detail::tlsContext; }

struct TxManagerOptions {
  std::uint32_t epochCadence = 0;  // 0: environment / default
  bool stampCommits = false;       // assign commit stamps for history checking
};

/// Shared transaction metadata for a family of composable structures.
class TxManager {
 public:
  struct Counters {
    std::uint64_t allocs = 0;
    std::uint64_t frees = 0;      // immediate frees: tDelete, abort undo
    std::uint64_t retired = 0;
    std::uint64_t reclaimed = 0;  // freed by the epoch reclaimer
    std::uint64_t commits = 0;
    std::uint64_t aborts = 0;

    std::int64_t outstanding() const {
      return static_cast<std::int64_t>(allocs) - static_cast<std::int64_t>(frees + reclaimed);
    }
  };

  explicit TxManager(TxManagerOptions opts = {});
  ~TxManager();
  TxManager(const TxManager&) = delete;
  TxManager& operator=(const TxManager&) = delete;

  void txBegin();
  /// Commits or throws TransactionAborted.
  void txEnd();
  [[noreturn]] void txAbort();
  /// Current validity of the read set; no state change.
  bool validateReads();

  bool inTransaction();
  TxContext& context();
  Descriptor& descriptor() { return slot().desc; }
  EpochReclaimer& reclaimer() noexcept { return reclaimer_; }

  std::size_t epochCollect() { return reclaimer_.collect(); }
  Counters counters() const;

  bool stampCommits() const noexcept { return stamps_.enabled.load(std::memory_order_relaxed); }
  void setStampCommits(bool on) noexcept { stamps_.enabled.store(on, std::memory_order_relaxed); }
  std::uint64_t drawStamp() noexcept { return stamps_.draw(); }

 private:
  struct alignas(64) ThreadSlot {
    ThreadSlot(std::uint32_t tid, StampSource& s) : desc(tid, s) {}
    Descriptor desc;
    TxContext ctx;
  };

  ThreadSlot& slot();
  void finishAbort(StatusWord d);
  void resetContext(TxContext& c);

  std::unique_ptr<std::atomic<ThreadSlot*>[]> slots_;
  EpochReclaimer reclaimer_;
  StampSource stamps_;
};

}  // namespace medley
