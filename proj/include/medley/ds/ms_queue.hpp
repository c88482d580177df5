#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "medley/composable.hpp"
#include "medley/ds/marked.hpp"
#include "medley/plain.hpp"

namespace medley::ds {

/// Michael-Scott queue with a dummy node.
template <class Policy = MedleyPolicy>
class MsQueue : public Policy::Base {
  using Base = typename Policy::Base;
  using Cell = typename Base::Cell;
  using OpStarter = typename Base::OpStarter;

 public:
  struct alignas(16) Node {
    explicit Node(std::uint64_t v) : val(v) {}
    const std::uint64_t val;
    Cell next;
  };

  /// Construct outside any transaction.
  explicit MsQueue(TxManager& mgr) : Base(mgr) {
    Node* dummy = this->template tNew<Node>(0);
    head_.init(wordOf(dummy));
    tail_.init(wordOf(dummy));
  }

  ~MsQueue() {
    Node* n = nodeOf<Node>(peek(head_).value);
    while (n != nullptr) {
      Node* next = nodeOf<Node>(peek(n->next).value);
      this->freeDirect(n);
      n = next;
    }
  }

  MsQueue(const MsQueue&) = delete;
  MsQueue& operator=(const MsQueue&) = delete;

  void enqueue(std::uint64_t v) {
    OpStarter starter(this->manager());
    Node* fresh = this->template tNew<Node>(v);
    for (;;) {
      const std::uint64_t t = tail_.nbtcLoad();
      Node* last = nodeOf<Node>(t);
      const std::uint64_t next = last->next.nbtcLoad();
      if (tail_.nbtcLoad() != t) continue;
      if (next == 0) {
        if (last->next.nbtcCas(0, wordOf(fresh), true, true)) {
          this->addToCleanups([this, t, fresh] { tail_.cas(t, wordOf(fresh)); });
          return;
        }
      } else {
        tail_.nbtcCas(t, next, false, false);
      }
    }
  }

  std::optional<std::uint64_t> dequeue() {
    OpStarter starter(this->manager());
    for (;;) {
      const std::uint64_t h = head_.nbtcLoad();
      const std::uint64_t t = tail_.nbtcLoad();
      Node* first = nodeOf<Node>(h);
      const std::uint64_t next = first->next.nbtcLoad();
      if (head_.nbtcLoad() != h) continue;
      if (next == 0) {
        // Empty: an enqueue by anyone would change this cell.
        this->addToReadSet(first->next, 0);
        return std::nullopt;
      }
      if (h == t) {
        tail_.nbtcCas(t, next, false, false);
        continue;
      }
      const std::uint64_t v = nodeOf<Node>(next)->val;
      const CasOutcome how = head_.nbtcCompareExchange(h, next, true, true);
      if (how != CasOutcome::Failed) {
        this->retireUnlinked(first, how);
        return v;
      }
    }
  }

  // Quiescent-state inspection.

  std::vector<std::uint64_t> snapshot() const {
    std::vector<std::uint64_t> out;
    const Node* n = nodeOf<Node>(peek(nodeOf<Node>(peek(head_).value)->next).value);
    for (; n != nullptr; n = nodeOf<Node>(peek(n->next).value)) out.push_back(n->val);
    return out;
  }

  /// Nodes reachable from head, including the dummy.
  std::size_t reachableNodes() const {
    std::size_t c = 0;
    for (const Node* n = nodeOf<Node>(peek(head_).value); n != nullptr;
         n = nodeOf<Node>(peek(n->next).value))
      ++c;
    return c;
  }

  std::optional<std::string> audit() const {
    if (!quiescentParityOk(head_) || !quiescentParityOk(tail_)) return "descriptor left in head/tail";
    const Node* n = nodeOf<Node>(peek(head_).value);
    const Node* last = nullptr;
    bool tailSeen = false;
    for (; n != nullptr; n = nodeOf<Node>(peek(n->next).value)) {
      if (!quiescentParityOk(n->next)) return "descriptor left in a queue node";
      if (wordOf(n) == peek(tail_).value) tailSeen = true;
      last = n;
    }
    if (!tailSeen) return "tail not reachable from head";
    if (wordOf(last) != peek(tail_).value) return "tail lags at quiescence";
    return std::nullopt;
  }

 private:
  Cell head_;
  Cell tail_;
};

}  // namespace medley::ds
