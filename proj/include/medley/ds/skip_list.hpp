#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "medley/composable.hpp"
#include "medley/ds/marked.hpp"
#include "medley/plain.hpp"

namespace medley::ds {

/// Lock-free skiplist map (Fraser / Herlihy-Shavit style).
///
/// Only the bottom level carries the abstract state: it is a Michael list of
/// transactional cells, and a node's membership is decided by the mark on its
/// bottom `next`. Upper levels are plain atomic index links maintained by
/// cleanups; they never affect what an operation returns.
template <class Policy = MedleyPolicy>
class SkipList : public Policy::Base {
  using Base = typename Policy::Base;
  using Cell = typename Base::Cell;
  using OpStarter = typename Base::OpStarter;

 public:
  static constexpr int kMaxLevel = 20;

  struct alignas(16) Node {
    Node(std::uint64_t k, std::uint64_t v, int h) : key(k), val(v), height(h) {
      for (auto& u : up) u.store(0, std::memory_order_relaxed);
    }
    const std::uint64_t key;
    const std::uint64_t val;
    const int height;
    // One reference for the inserter's tower stitching, one for the remover.
    std::atomic<int> refs{2};
    Cell next0;
    std::array<std::atomic<std::uint64_t>, kMaxLevel> up;  // index 0 unused
  };

  explicit SkipList(TxManager& mgr) : Base(mgr), head_(new Node(0, 0, kMaxLevel)) {}

  ~SkipList() {
    Node* n = nodeOf<Node>(peek(head_->next0).value);
    while (n != nullptr) {
      Node* next = nodeOf<Node>(peek(n->next0).value);
      this->freeDirect(n);
      n = next;
    }
    delete head_;
  }

  SkipList(const SkipList&) = delete;
  SkipList& operator=(const SkipList&) = delete;

  std::optional<std::uint64_t> get(std::uint64_t key) {
    OpStarter starter(this->manager());
    Position pos;
    std::optional<std::uint64_t> res;
    const bool found = find(key, pos);
    if (found) res = pos.curr->val;
    this->addToReadSet(*pos.prev, wordOf(pos.curr));
    if (found) this->addToReadSet(pos.curr->next0, pos.next);
    return res;
  }

  /// Insert if absent. Returns false (and changes nothing) if present.
  bool insert(std::uint64_t key, std::uint64_t val) {
    OpStarter starter(this->manager());
    Node* fresh = nullptr;
    for (;;) {
      Position pos;
      if (find(key, pos)) {
        this->addToReadSet(*pos.prev, wordOf(pos.curr));
        this->addToReadSet(pos.curr->next0, pos.next);
        if (fresh != nullptr) this->tDelete(fresh);
        return false;
      }
      if (fresh == nullptr) fresh = this->template tNew<Node>(key, val, randomHeight());
      fresh->next0.init(wordOf(pos.curr));
      if (pos.prev->nbtcCas(wordOf(pos.curr), wordOf(fresh), true, true)) break;
    }
    this->addToCleanups([this, fresh] { stitch(fresh); });
    return true;
  }

  std::optional<std::uint64_t> remove(std::uint64_t key) {
    OpStarter starter(this->manager());
    for (;;) {
      Position pos;
      if (!find(key, pos)) {
        this->addToReadSet(*pos.prev, wordOf(pos.curr));
        return std::nullopt;
      }
      if (pos.curr->next0.nbtcCas(pos.next, withMark(pos.next), true, true)) {
        const std::uint64_t prior = pos.curr->val;
        Node* victim = pos.curr;
        this->addToCleanups([this, victim] { finishRemove(victim); });
        return prior;
      }
    }
  }

  // Quiescent-state inspection.

  std::vector<std::pair<std::uint64_t, std::uint64_t>> snapshot() const {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
    for (const Node* n = nodeOf<Node>(peek(head_->next0).value); n != nullptr;) {
      const auto w = peek(n->next0).value;
      if (!isMarked(w)) out.emplace_back(n->key, n->val);
      n = nodeOf<Node>(w);
    }
    return out;
  }

  std::size_t reachableNodes() const {
    std::size_t c = 0;
    for (const Node* n = nodeOf<Node>(peek(head_->next0).value); n != nullptr;
         n = nodeOf<Node>(peek(n->next0).value))
      ++c;
    return c;
  }

  /// Parity, ordering, and index consistency: every upper-level link
  /// points at a node that is also on the bottom level.
  std::optional<std::string> audit() const {
    std::vector<const Node*> bottom;
    if (!quiescentParityOk(head_->next0)) return "descriptor left at head";
    std::optional<std::uint64_t> last;
    for (const Node* n = nodeOf<Node>(peek(head_->next0).value); n != nullptr;) {
      if (!quiescentParityOk(n->next0)) return "descriptor left in node " + std::to_string(n->key);
      const auto w = peek(n->next0).value;
      if (isMarked(w)) return "marked node still linked at quiescence";
      if (last && *last >= n->key) return "bottom level out of order";
      last = n->key;
      bottom.push_back(n);
      n = nodeOf<Node>(w);
    }
    for (int lvl = 1; lvl < kMaxLevel; ++lvl) {
      std::size_t i = 0;
      for (const Node* n = nodeOf<Node>(head_->up[lvl].load()); n != nullptr;
           n = nodeOf<Node>(n->up[lvl].load())) {
        if (n->height <= lvl) return "node linked above its height";
        while (i < bottom.size() && bottom[i] != n) ++i;
        if (i == bottom.size()) return "index link to a node absent from the bottom level";
      }
    }
    return std::nullopt;
  }

 private:
  struct Position {
    Cell* prev = nullptr;
    Node* curr = nullptr;
    std::uint64_t next = 0;
    std::array<Node*, kMaxLevel> preds{};
    std::array<Node*, kMaxLevel> succs{};
  };

  static int randomHeight() {
    thread_local std::uint64_t s = 0x9e3779b97f4a7c15ULL ^ reinterpret_cast<std::uintptr_t>(&s);
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    int h = 1;
    std::uint64_t bits = s;
    while (h < kMaxLevel && (bits & 1)) {
      ++h;
      bits >>= 1;
    }
    return h;
  }

  /// Upper levels first (snipping marked index links), then the bottom level
  /// Michael-style from the lowest predecessor that is not itself deleted.
  bool find(std::uint64_t key, Position& pos) {
  retry:
    Node* pred = head_;
    for (int lvl = kMaxLevel - 1; lvl >= 1; --lvl) {
      Node* curr = nodeOf<Node>(pred->up[lvl].load(std::memory_order_acquire));
      while (curr != nullptr) {
        std::uint64_t succ = curr->up[lvl].load(std::memory_order_acquire);
        while (isMarked(succ)) {
          std::uint64_t expect = wordOf(curr);
          if (!pred->up[lvl].compare_exchange_strong(expect, unmarked(succ))) goto retry;
          curr = nodeOf<Node>(succ);
          if (curr == nullptr) break;
          succ = curr->up[lvl].load(std::memory_order_acquire);
        }
        if (curr == nullptr || curr->key >= key) break;
        pred = curr;
        curr = nodeOf<Node>(succ);
      }
      pos.preds[lvl] = pred;
      pos.succs[lvl] = curr;
    }

    // Start from the lowest predecessor not deleted at the bottom level. A
    // cell under our own descriptor may resolve to a mark we speculated.
    pos.prev = nullptr;
    std::uint64_t currW = 0;
    for (int lvl = 1; lvl < kMaxLevel && pos.prev == nullptr; ++lvl) {
      Cell& cand = pos.preds[lvl]->next0;
      const Peek p = peek(cand);
      if (!p.descriptor && isMarked(p.value)) continue;
      currW = cand.nbtcLoad();
      if (!isMarked(currW)) pos.prev = &cand;
    }
    if (pos.prev == nullptr) {
      pos.prev = &head_->next0;
      currW = pos.prev->nbtcLoad();
    }
    for (;;) {
      pos.curr = nodeOf<Node>(currW);
      if (pos.curr == nullptr) return false;
      const std::uint64_t nextW = pos.curr->next0.nbtcLoad();
      if (pos.prev->nbtcLoad() != currW) goto retry;
      if (!isMarked(nextW)) {
        if (pos.curr->key >= key) {
          pos.next = nextW;
          return pos.curr->key == key;
        }
        pos.prev = &pos.curr->next0;
      } else {
        // The remover owns retirement of bottom-level victims.
        if (pos.prev->nbtcCompareExchange(currW, unmarked(nextW), false, false) == CasOutcome::Failed)
          goto retry;
        currW = pos.prev->nbtcLoad();
        if (isMarked(currW)) goto retry;
        continue;
      }
      currW = unmarked(nextW);
    }
  }

  /// Unlinks every marked index link on the path to `key`, looking past
  /// nodes with an equal key: a replacement may have been stitched in front
  /// of a node whose removal cleanup has not run yet.
  void snipIndex(std::uint64_t key) {
  retry:
    Node* pred = head_;
    for (int lvl = kMaxLevel - 1; lvl >= 1; --lvl) {
      Node* p = pred;
      Node* curr = nodeOf<Node>(p->up[lvl].load(std::memory_order_acquire));
      while (curr != nullptr) {
        const std::uint64_t succ = curr->up[lvl].load(std::memory_order_acquire);
        if (isMarked(succ)) {
          std::uint64_t expect = wordOf(curr);
          if (!p->up[lvl].compare_exchange_strong(expect, unmarked(succ))) goto retry;
          curr = nodeOf<Node>(succ);
          continue;
        }
        if (curr->key > key) break;
        if (curr->key < key) pred = curr;
        p = curr;
        curr = nodeOf<Node>(succ);
      }
    }
  }

  static bool deleted(const Node* n) {
    const Peek p = peek(n->next0);
    return !p.descriptor && isMarked(p.value);
  }

  void stitch(Node* n) {
    Position pos;
    for (int lvl = 1; lvl < n->height; ++lvl) {
      for (;;) {
        if (deleted(n)) goto done;
        find(n->key, pos);
        Node* succ = pos.succs[lvl];
        std::uint64_t cur = n->up[lvl].load(std::memory_order_acquire);
        if (isMarked(cur)) goto done;
        if (!n->up[lvl].compare_exchange_strong(cur, wordOf(succ))) goto done;
        std::uint64_t expect = wordOf(succ);
        if (pos.preds[lvl]->up[lvl].compare_exchange_strong(expect, wordOf(n))) break;
      }
    }
  done:
    // A racing remover may have marked levels we linked afterwards.
    if (deleted(n)) {
      snipIndex(n->key);
      find(n->key, pos);
    }
    release(n);
  }

  void finishRemove(Node* n) {
    for (int lvl = n->height - 1; lvl >= 1; --lvl) {
      std::uint64_t w = n->up[lvl].load(std::memory_order_acquire);
      while (!isMarked(w) && !n->up[lvl].compare_exchange_weak(w, withMark(w))) {
      }
    }
    snipIndex(n->key);
    Position pos;
    find(n->key, pos);
    release(n);
  }

  void release(Node* n) {
    if (n->refs.fetch_sub(1, std::memory_order_acq_rel) == 1) this->tRetire(n);
  }

  Node* const head_;
};

}  // namespace medley::ds
