#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "medley/atomic_pair.hpp"
#include "medley/status_word.hpp"

namespace medley {

class CasCell;

struct ReadEntry {
  std::atomic<CasCell*> cell{nullptr};
  std::atomic<std::uint64_t> value{0};
  std::atomic<std::uint64_t> counter{0};
};

struct WriteEntry {
  std::atomic<CasCell*> cell{nullptr};  // nullptr once dropped
  std::atomic<std::uint64_t> oldValue{0};
  std::atomic<std::uint64_t> oldCounter{0};
  std::atomic<std::uint64_t> newValue{0};
};

/// Append-only entry storage reused across one owner's transactions.
///
/// Segments are never freed while the log lives, so helpers may traverse
/// concurrently with the owner clearing and refilling it. Helpers guard
/// against mixing transactions by re-checking the descriptor serial after
/// every entry they read.
template <class Entry>
class EntryLog {
 public:
  static constexpr std::size_t kSegmentSize = 64;

  EntryLog() { index_.push_back(&head_); }
  ~EntryLog() {
    Segment* s = head_.next.load(std::memory_order_relaxed);
    while (s != nullptr) {
      Segment* n = s->next.load(std::memory_order_relaxed);
      delete s;
      s = n;
    }
  }
  EntryLog(const EntryLog&) = delete;
  EntryLog& operator=(const EntryLog&) = delete;

  // Owner side.
  void clear() noexcept { size_.store(0, std::memory_order_release); }
  Entry& append() {
    const auto n = size_.load(std::memory_order_relaxed);
    const auto seg = n / kSegmentSize;
    if (seg == index_.size()) {
      auto* s = new Segment;
      index_.back()->next.store(s, std::memory_order_release);
      index_.push_back(s);
    }
    return index_[seg]->entries[n % kSegmentSize];
  }
  /// Makes the entry returned by the last append() visible to helpers.
  void publish() noexcept { size_.fetch_add(1, std::memory_order_release); }
  Entry& operator[](std::size_t i) noexcept {
    return index_[i / kSegmentSize]->entries[i % kSegmentSize];
  }
  const Entry& operator[](std::size_t i) const noexcept {
    return index_[i / kSegmentSize]->entries[i % kSegmentSize];
  }

  // Any thread.
  std::size_t size() const noexcept { return size_.load(std::memory_order_acquire); }

  /// Helper traversal over the first `count` entries via segment links.
  template <class Fn>
  bool forEach(std::size_t count, Fn&& fn) const {
    const Segment* s = &head_;
    for (std::size_t i = 0; i < count; ++i) {
      if (i > 0 && i % kSegmentSize == 0) {
        s = s->next.load(std::memory_order_acquire);
        if (s == nullptr) return false;
      }
      if (!fn(s->entries[i % kSegmentSize])) return false;
    }
    return true;
  }

 private:
  struct Segment {
    std::array<Entry, kSegmentSize> entries;
    std::atomic<Segment*> next{nullptr};
  };

  Segment head_;
  std::atomic<std::size_t> size_{0};
  std::vector<Segment*> index_;  // owner-private
};

/// Shared source of commit stamps; stamping is off unless `enabled`.
struct StampSource {
  std::atomic<bool> enabled{false};
  std::atomic<std::uint64_t> clock{0};

  std::uint64_t draw() noexcept { return clock.fetch_add(1, std::memory_order_acq_rel) + 1; }
};

/// Per-thread transaction record shared with helpers.
class Descriptor {
 public:
  Descriptor(std::uint32_t tid, StampSource& stamps);
  Descriptor(const Descriptor&) = delete;
  Descriptor& operator=(const Descriptor&) = delete;

  std::uint32_t tid() const noexcept { return tid_; }
  StatusWord status() const noexcept { return {status_.load(std::memory_order_seq_cst)}; }
  std::uint64_t ref() const noexcept { return reinterpret_cast<std::uint64_t>(this); }
  static Descriptor* fromRef(std::uint64_t v) noexcept { return reinterpret_cast<Descriptor*>(v); }

  /// Status CAS restricted to the legal edges of the state machine; an
  /// illegal (from, to) pair is rejected without touching the word.
  bool stsCas(StatusWord d, TxState from, TxState to) noexcept;
  bool setReady() noexcept;
  bool commit(StatusWord d) noexcept;
  bool abort(StatusWord d) noexcept;

  /// Owner: clear both sets and move to the next serial in InPrep.
  void begin() noexcept;

  /// Resolve this descriptor, found in `cell` as `observed`: abort it if
  /// still in preparation, help commit it if ready, then uninstall.
  void tryFinalize(CasCell& cell, Pair observed);

  /// True iff every read entry still matches its cell and `d` remains
  /// the current transaction instance throughout.
  bool validateReads(StatusWord d) const;

  /// Replace this descriptor in every written cell with the new value
  /// (Committed) or the old value (Aborted). `d` must be terminal.
  void uninstall(StatusWord d);

  // Owner-side set maintenance.
  void recordRead(CasCell& cell, Pair observed);
  WriteEntry& recordWrite(CasCell& cell, Pair old, std::uint64_t desired);
  void dropWrite(WriteEntry& e) noexcept;
  WriteEntry* findWrite(const CasCell& cell) noexcept;
  std::size_t readCount() const noexcept { return reads_.size(); }
  std::size_t writeCount() const noexcept { return writes_.size(); }

  /// Commit stamp for transaction `d`: drawn once, by whichever thread first
  /// prepares to validate it. Zero when stamping is off.
  std::uint64_t ensureStamp(StatusWord d) noexcept;
  std::uint64_t stampFor(StatusWord d) const noexcept;

 private:
  const std::uint32_t tid_;
  StampSource& stamps_;
  alignas(64) std::atomic<std::uint64_t> status_;
  AtomicPair stamp_;  // (stamp, serial)
  EntryLog<ReadEntry> reads_;
  EntryLog<WriteEntry> writes_;
};

}  // namespace medley
