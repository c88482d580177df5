#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "medley/composable.hpp"
#include "medley/ds/marked.hpp"
#include "medley/plain.hpp"

namespace medley::ds {

/// Michael's lock-free chained hash table (fixed bucket count), usable
/// standalone or inside transactions.
template <class Policy = MedleyPolicy>
class HashTable : public Policy::Base {
  using Base = typename Policy::Base;
  using Cell = typename Base::Cell;
  using OpStarter = typename Base::OpStarter;

 public:
  static constexpr std::size_t kDefaultBuckets = std::size_t{1} << 20;

  struct alignas(16) Node {
    Node(std::uint64_t k, std::uint64_t v) : key(k), val(v) {}
    const std::uint64_t key;
    const std::uint64_t val;
    Cell next;
  };

  explicit HashTable(TxManager& mgr, std::size_t buckets = kDefaultBuckets)
      : Base(mgr), mask_(std::bit_ceil(std::max<std::size_t>(buckets, 1)) - 1),
        buckets_(std::make_unique<Cell[]>(mask_ + 1)) {}

  ~HashTable() {
    for (std::size_t b = 0; b <= mask_; ++b) {
      Node* n = nodeOf<Node>(peek(buckets_[b]).value);
      while (n != nullptr) {
        Node* next = nodeOf<Node>(peek(n->next).value);
        this->freeDirect(n);
        n = next;
      }
    }
  }

  HashTable(const HashTable&) = delete;
  HashTable& operator=(const HashTable&) = delete;

  std::size_t bucketCount() const noexcept { return mask_ + 1; }

  std::optional<std::uint64_t> get(std::uint64_t key) {
    OpStarter starter(this->manager());
    Position pos;
    std::optional<std::uint64_t> res;
    const bool found = find(key, pos);
    if (found) res = pos.curr->val;
    this->addToReadSet(*pos.prev, wordOf(pos.curr));
    // Guards the found node against a concurrent remove or replace, which
    // marks its successor cell and leaves the predecessor untouched.
    if (found) this->addToReadSet(pos.curr->next, pos.next);
    return res;
  }

  /// Insert, or replace the value if `key` is present. Returns the prior value.
  std::optional<std::uint64_t> put(std::uint64_t key, std::uint64_t val) {
    OpStarter starter(this->manager());
    Node* fresh = this->template tNew<Node>(key, val);
    for (;;) {
      Position pos;
      if (find(key, pos)) {
        fresh->next.init(pos.next);
        if (pos.curr->next.nbtcCas(pos.next, withMark(wordOf(fresh)), true, true)) {
          const std::uint64_t prior = pos.curr->val;
          Cell* prev = pos.prev;
          Node* old = pos.curr;
          this->addToCleanups([this, prev, old, fresh, key] {
            if (prev->cas(wordOf(old), wordOf(fresh)))
              this->tRetire(old);
            else
              helpUnlink(key);
          });
          return prior;
        }
      } else {
        fresh->next.init(wordOf(pos.curr));
        if (pos.prev->nbtcCas(wordOf(pos.curr), wordOf(fresh), true, true)) return std::nullopt;
      }
    }
  }

  std::optional<std::uint64_t> remove(std::uint64_t key) {
    OpStarter starter(this->manager());
    for (;;) {
      Position pos;
      if (!find(key, pos)) {
        this->addToReadSet(*pos.prev, wordOf(pos.curr));
        return std::nullopt;
      }
      if (pos.curr->next.nbtcCas(pos.next, withMark(pos.next), true, true)) {
        const std::uint64_t prior = pos.curr->val;
        Cell* prev = pos.prev;
        Node* victim = pos.curr;
        const std::uint64_t succ = pos.next;
        this->addToCleanups([this, prev, victim, succ, key] {
          if (prev->cas(wordOf(victim), succ))
            this->tRetire(victim);
          else
            helpUnlink(key);
        });
        return prior;
      }
    }
  }

  // Quiescent-state inspection (no concurrent operations).

  std::vector<std::pair<std::uint64_t, std::uint64_t>> snapshot() const {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
    forEachNode([&](const Node& n, bool deleted) {
      if (!deleted) out.emplace_back(n.key, n.val);
    });
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Nodes reachable from the buckets, deleted or not.
  std::size_t reachableNodes() const {
    std::size_t n = 0;
    forEachNode([&](const Node&, bool) { ++n; });
    return n;
  }

  /// Structural audit: parity on every cell, sorted unique live keys per
  /// bucket. Returns a description of the first problem found.
  std::optional<std::string> audit() const {
    for (std::size_t b = 0; b <= mask_; ++b) {
      if (!quiescentParityOk(buckets_[b])) return "descriptor left in bucket " + std::to_string(b);
      const Node* n = nodeOf<Node>(peek(buckets_[b]).value);
      std::optional<std::uint64_t> lastLive;
      while (n != nullptr) {
        if (!quiescentParityOk(n->next)) return "descriptor left in node " + std::to_string(n->key);
        if ((mixKey(n->key) & mask_) != b) return "node in wrong bucket";
        const auto w = peek(n->next).value;
        if (!isMarked(w)) {
          if (lastLive && *lastLive >= n->key) return "bucket chain out of order";
          lastLive = n->key;
        }
        n = nodeOf<Node>(w);
      }
    }
    return std::nullopt;
  }

 private:
  struct Position {
    Cell* prev = nullptr;
    Node* curr = nullptr;
    std::uint64_t next = 0;
  };

  Cell& bucketFor(std::uint64_t key) noexcept { return buckets_[mixKey(key) & mask_]; }

  /// Positions `pos` at the first unmarked node with key >= `key`,
  /// unlinking marked nodes on the way. `pos.prev` is an unmarked cell.
  bool find(std::uint64_t key, Position& pos) {
  retry:
    pos.prev = &bucketFor(key);
    std::uint64_t currW = pos.prev->nbtcLoad();
    for (;;) {
      pos.curr = nodeOf<Node>(currW);
      if (pos.curr == nullptr) return false;
      const std::uint64_t nextW = pos.curr->next.nbtcLoad();
      if (pos.prev->nbtcLoad() != currW) goto retry;
      if (!isMarked(nextW)) {
        if (pos.curr->key >= key) {
          pos.next = nextW;
          return pos.curr->key == key;
        }
        pos.prev = &pos.curr->next;
      } else {
        const CasOutcome how = pos.prev->nbtcCompareExchange(currW, unmarked(nextW), false, false);
        if (how == CasOutcome::Failed) goto retry;
        this->retireUnlinked(pos.curr, how);
        // Reload so the buffered read of prev reflects the unlink.
        currW = pos.prev->nbtcLoad();
        if (isMarked(currW)) goto retry;
        continue;
      }
      currW = unmarked(nextW);
    }
  }

  void helpUnlink(std::uint64_t key) {
    Position pos;
    find(key, pos);
  }

  template <class Fn>
  void forEachNode(Fn&& fn) const {
    for (std::size_t b = 0; b <= mask_; ++b) {
      const Node* n = nodeOf<Node>(peek(buckets_[b]).value);
      while (n != nullptr) {
        const auto w = peek(n->next).value;
        fn(*n, isMarked(w));
        n = nodeOf<Node>(w);
      }
    }
  }

  const std::size_t mask_;
  std::unique_ptr<Cell[]> buckets_;
};

}  // namespace medley::ds
