#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "medley/ds/kind.hpp"
#include "medley/hooks.hpp"

namespace medley::verify {

struct PropertyResult {
  bool ok = true;
  std::string detail;
  std::size_t count = 0;  // trials, schedules, or attempts, per property

  explicit operator bool() const noexcept { return ok; }
};

/// Suspends one transaction at `point` (and, for BeforeFinalize, a second
/// one after its install so the first meets a foreign descriptor), then runs
/// a conflicting transaction alone. Passes when that transaction commits
/// within one retry and the structure stays consistent once all finish.
/// `count` is the runner's attempt count.
PropertyResult obstructionFreedom(ds::StructureKind kind, HookPoint point);

/// Force-aborts `transactions` random transactions, by explicit txAbort at a
/// random operation or by a remote abort at a random hook point. Each must
/// leave contents unchanged and the structure intact; allocation balance
/// must net to zero after a collect.
PropertyResult abortRollback(ds::StructureKind kind, std::size_t transactions, std::uint64_t seed);

/// `trials` rounds of tx{put(k,v); get(k)}, tx{insert(k,v); get(k)} on the
/// skiplist, and tx{enqueue(x); dequeue()} on an empty queue.
PropertyResult readOwnWrites(std::size_t trials, std::uint64_t seed);

/// Two threads, two transactions each, over two keys of one hash table.
/// Enumerates every schedule at hook-point granularity with at most
/// `preemptions` voluntary context switches and checks each history for
/// strict serializability and the final contents against the replay.
/// `count` is the number of schedules run.
PropertyResult exploreInterleavings(int preemptions);

/// Concurrent standalone operations on a small key space, checked with the
/// Wing-Gong search. `count` is the number of events checked.
PropertyResult standaloneLinearizability(ds::StructureKind kind, std::uint64_t seed, int rounds);

}  // namespace medley::verify
