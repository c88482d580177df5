#include "medley/verify/linearizability.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace medley::verify {

namespace {

// Sequential state of one partition: present value of one key, or queue
// contents front to back.
using State = std::vector<std::uint64_t>;

std::optional<std::uint64_t> step(State& s, const HistoryEvent& e) {
  switch (e.op) {
    case OpName::Get:
      return s.empty() ? std::nullopt : std::optional<std::uint64_t>(s[0]);
    case OpName::Put: {
      std::optional<std::uint64_t> prior;
      if (!s.empty()) prior = s[0];
      s.assign(1, e.args.at(1));
      return prior;
    }
    case OpName::Remove: {
      if (s.empty()) return std::nullopt;
      const auto prior = s[0];
      s.clear();
      return prior;
    }
    case OpName::Insert:
      if (!s.empty()) return 0;
      s.assign(1, e.args.at(1));
      return 1;
    case OpName::Enqueue:
      s.push_back(e.args.at(0));
      return std::nullopt;
    case OpName::Dequeue: {
      if (s.empty()) return std::nullopt;
      const auto v = s.front();
      s.erase(s.begin());
      return v;
    }
  }
  return std::nullopt;
}

class Search {
 public:
  Search(const History& h, std::vector<std::size_t> idx) : h_(h), idx_(std::move(idx)) {}

  bool run() { return dfs(0, {}); }

 private:
  bool dfs(std::uint64_t done, const State& s) {
    const std::uint64_t all = idx_.size() == 64 ? ~0ULL : ((1ULL << idx_.size()) - 1);
    if (done == all) return true;
    if (!seen_.insert({done, s}).second) return false;
    std::int64_t minResponse = INT64_MAX;
    for (std::size_t i = 0; i < idx_.size(); ++i)
      if (!(done >> i & 1)) minResponse = std::min(minResponse, h_[idx_[i]].responseNs);
    for (std::size_t i = 0; i < idx_.size(); ++i) {
      if (done >> i & 1) continue;
      const auto& e = h_[idx_[i]];
      // Only operations not preceded by a pending operation's response may
      // linearize next.
      if (e.invocationNs > minResponse) continue;
      State next = s;
      if (step(next, e) != e.result) continue;
      if (dfs(done | (1ULL << i), next)) return true;
    }
    return false;
  }

  const History& h_;
  std::vector<std::size_t> idx_;
  std::set<std::pair<std::uint64_t, State>> seen_;
};

}  // namespace

Verdict checkLinearizable(const History& h) {
  Verdict v;
  std::map<std::pair<std::uint32_t, std::uint64_t>, std::vector<std::size_t>> parts;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto& e = h[i];
    const bool queueOp = e.op == OpName::Enqueue || e.op == OpName::Dequeue;
    const std::size_t arity = (e.op == OpName::Put || e.op == OpName::Insert) ? 2
                              : e.op == OpName::Dequeue                       ? 0
                                                                              : 1;
    if (e.args.size() != arity) {
      v.ok = false;
      v.event = i;
      v.message = "wrong argument count for " + std::string(toString(e.op));
      return v;
    }
    parts[{e.structId, queueOp ? ~0ULL : e.args[0]}].push_back(i);
  }
  for (auto& [key, idx] : parts) {
    if (idx.size() > 64) {
      v.ok = false;
      v.event = idx[64];
      v.message = "partition too large for exhaustive search (" + std::to_string(idx.size()) + " events)";
      return v;
    }
    const std::size_t first = idx.front();
    const std::size_t n = idx.size();
    if (!Search(h, std::move(idx)).run()) {
      v.ok = false;
      v.event = first;
      v.message = "no linearization for structure " + std::to_string(key.first) +
                  (key.second == ~0ULL ? std::string(" (queue)") : " key " + std::to_string(key.second));
      return v;
    }
    v.events += n;
  }
  return v;
}

}  // namespace medley::verify
