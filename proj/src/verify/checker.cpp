#include "medley/verify/checker.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>

#include "medley/verify/reference_model.hpp"

namespace medley::verify {

namespace {

struct Tx {
  CommitKey key;
  std::vector<std::size_t> events;  // program order
  std::int64_t invocation = 0;
  std::int64_t response = 0;
};

std::string show(std::optional<std::uint64_t> v) { return v ? std::to_string(*v) : "none"; }

std::string describe(const HistoryEvent& e) {
  std::string s = "tid " + std::to_string(e.tid) + " serial " + std::to_string(e.serial) + " " +
                  std::string(toString(e.op)) + "(";
  for (std::size_t i = 0; i < e.args.size(); ++i) s += (i ? "," : "") + std::to_string(e.args[i]);
  return s + ") on struct " + std::to_string(e.structId);
}

/// Committed transactions in commit-key order. Returns the index of an
/// event whose commit key disagrees with its transaction's, if any.
std::optional<std::size_t> groupCommitted(const History& h, std::map<std::pair<std::uint32_t, std::uint64_t>, Tx>& byTx,
                                          std::vector<const Tx*>& order) {
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto& e = h[i];
    if (!e.commit) continue;
    auto [it, fresh] = byTx.try_emplace({e.commit->tid, e.commit->serial});
    Tx& tx = it->second;
    if (fresh) {
      tx.key = *e.commit;
      tx.invocation = e.invocationNs;
      tx.response = e.responseNs;
    } else if (!(tx.key == *e.commit)) {
      return i;
    }
    tx.events.push_back(i);
    tx.invocation = std::min(tx.invocation, e.invocationNs);
    tx.response = std::max(tx.response, e.responseNs);
  }
  order.reserve(byTx.size());
  for (const auto& [_, tx] : byTx) order.push_back(&tx);
  std::sort(order.begin(), order.end(), [](const Tx* a, const Tx* b) { return a->key < b->key; });
  return std::nullopt;
}

}  // namespace

ReferenceModel replayCommitted(const History& h) {
  std::map<std::pair<std::uint32_t, std::uint64_t>, Tx> byTx;
  std::vector<const Tx*> order;
  groupCommitted(h, byTx, order);
  ReferenceModel model;
  for (const Tx* tx : order)
    for (std::size_t idx : tx->events) model.apply(h[idx].structId, h[idx].op, h[idx].args);
  return model;
}

Verdict checkStrictSerializability(const History& h, CheckOptions opts) {
  Verdict v;
  // Events of one transaction sit in one thread log, so history order is
  // program order.
  std::map<std::pair<std::uint32_t, std::uint64_t>, Tx> byTx;
  std::vector<const Tx*> order;
  if (auto bad = groupCommitted(h, byTx, order)) {
    v.ok = false;
    v.event = *bad;
    v.message = "events of one transaction carry different commit keys at " + describe(h[*bad]);
    return v;
  }

  // Real time: a transaction may not serialize after one that started only
  // after it had already finished.
  std::int64_t latestStart = INT64_MIN;
  const Tx* latestStarter = nullptr;
  for (const Tx* tx : order) {
    if (latestStarter != nullptr && tx->response + opts.slackNs < latestStart) {
      v.ok = false;
      v.event = tx->events.front();
      v.message = "real-time order broken: " + describe(h[tx->events.front()]) + " (stamp " +
                  std::to_string(tx->key.stamp) + ") finished before " +
                  describe(h[latestStarter->events.front()]) + " (stamp " +
                  std::to_string(latestStarter->key.stamp) +
                  ") started, yet serializes after it";
      return v;
    }
    if (tx->invocation > latestStart) {
      latestStart = tx->invocation;
      latestStarter = tx;
    }
  }

  ReferenceModel model;
  for (const Tx* tx : order) {
    for (std::size_t idx : tx->events) {
      const auto& e = h[idx];
      std::optional<std::uint64_t> expected;
      try {
        expected = model.apply(e.structId, e.op, e.args);
      } catch (const std::invalid_argument& ex) {
        v.ok = false;
        v.event = idx;
        v.message = "malformed event " + describe(e) + ": " + ex.what();
        return v;
      }
      if (expected != e.result) {
        v.ok = false;
        v.event = idx;
        v.message = "divergent result for " + describe(e) + " (stamp " +
                    std::to_string(tx->key.stamp) + "): recorded " + show(e.result) +
                    ", sequential replay gives " + show(expected);
        return v;
      }
      ++v.events;
    }
    ++v.transactions;
  }
  return v;
}

}  // namespace medley::verify
