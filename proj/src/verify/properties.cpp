#include "medley/verify/properties.hpp"

#include <atomic>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "medley/ds/any.hpp"
#include "medley/tx_manager.hpp"
#include "medley/verify/checker.hpp"
#include "medley/verify/controller.hpp"
#include "medley/verify/history.hpp"
#include "medley/verify/linearizability.hpp"

namespace medley::verify {

using ds::AnyStructure;
using ds::StructureKind;

namespace {

constexpr std::uint64_t kKeyA = 1;
constexpr std::uint64_t kKeyB = 2;

PropertyResult failure(std::string why) {
  PropertyResult r;
  r.ok = false;
  r.detail = std::move(why);
  return r;
}

std::string describe(std::exception_ptr e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  } catch (...) {
    return "unknown exception";
  }
}

void prefillPair(AnyStructure& s) {
  switch (s.kind()) {
    case StructureKind::HashTable:
      s.apply(ds::OpName::Put, kKeyA, 100);
      s.apply(ds::OpName::Put, kKeyB, 200);
      break;
    case StructureKind::SkipList:
      s.apply(ds::OpName::Insert, kKeyA, 100);
      s.apply(ds::OpName::Insert, kKeyB, 200);
      break;
    case StructureKind::Queue:
      s.apply(ds::OpName::Enqueue, 100);
      s.apply(ds::OpName::Enqueue, 200);
      break;
  }
}

/// The contended transaction body used by the obstruction scenarios.
void contendedBody(AnyStructure& s, std::uint64_t tag) {
  switch (s.kind()) {
    case StructureKind::HashTable: {
      const auto v = s.apply(ds::OpName::Get, kKeyA).value_or(0);
      s.apply(ds::OpName::Put, kKeyA, v + 1);
      s.apply(ds::OpName::Put, kKeyB, tag);
      break;
    }
    case StructureKind::SkipList:
      s.apply(ds::OpName::Get, kKeyA);
      s.apply(ds::OpName::Remove, kKeyB);
      s.apply(ds::OpName::Insert, kKeyB, tag);
      break;
    case StructureKind::Queue:
      s.apply(ds::OpName::Enqueue, tag);
      s.apply(ds::OpName::Dequeue);
      break;
  }
}

struct Tally {
  int attempts = 0;
  int commits = 0;
};

void retryLoop(TxManager& mgr, const std::function<void()>& body, Tally& t, int cap = 1000) {
  for (;;) {
    ++t.attempts;
    try {
      mgr.txBegin();
      body();
      mgr.txEnd();
      ++t.commits;
      return;
    } catch (const TransactionAborted&) {
      if (t.attempts >= cap) throw std::runtime_error("transaction still aborting after retry cap");
    }
  }
}

/// Aborts the calling thread's transaction from inside a hook, standing in
/// for a conflicting thread that aborts it at that protocol point.
class RemoteAbort final : public HookSink {
 public:
  RemoteAbort(TxManager& mgr, HookPoint p, int k) : mgr_(mgr), point_(p), remaining_(k) {}
  void reached(HookPoint p) override {
    if (fired || p != point_ || --remaining_ > 0) return;
    Descriptor& d = mgr_.descriptor();
    const StatusWord st = d.status();
    if (st.state() == TxState::InPrep || st.state() == TxState::InProg) d.abort(st);
    fired = true;
  }
  bool fired = false;

 private:
  TxManager& mgr_;
  HookPoint point_;
  int remaining_;
};

struct SinkGuard {
  explicit SinkGuard(HookSink* s) { hooks::install(s); }
  ~SinkGuard() { hooks::install(nullptr); }
};

void randomOp(AnyStructure& s, std::mt19937_64& rng, std::uint64_t keys) {
  const auto k = rng() % keys;
  const auto v = rng() % 1000;
  switch (s.kind()) {
    case StructureKind::HashTable: {
      static constexpr ds::OpName ops[] = {ds::OpName::Get, ds::OpName::Put, ds::OpName::Remove};
      s.apply(ops[rng() % 3], k, v);
      break;
    }
    case StructureKind::SkipList: {
      static constexpr ds::OpName ops[] = {ds::OpName::Get, ds::OpName::Insert, ds::OpName::Remove};
      s.apply(ops[rng() % 3], k, v);
      break;
    }
    case StructureKind::Queue:
      s.apply(rng() % 2 ? ds::OpName::Enqueue : ds::OpName::Dequeue, v);
      break;
  }
}

}  // namespace

PropertyResult obstructionFreedom(StructureKind kind, HookPoint point) {
  TxManager mgr;
  auto s = ds::makeStructure(kind, mgr, false, 64);
  prefillPair(*s);

  Tally a, b, c;
  Controller ctl;
  if (point == HookPoint::BeforeFinalize) {
    const auto third = ctl.spawn([&] { retryLoop(mgr, [&] { contendedBody(*s, 3); }, c); });
    if (!ctl.runUntil(third, HookPoint::AfterInstall))
      return failure("third thread finished before installing");
  }
  const auto suspended = ctl.spawn([&] { retryLoop(mgr, [&] { contendedBody(*s, 1); }, a); });
  const auto runner = ctl.spawn([&] { retryLoop(mgr, [&] { contendedBody(*s, 2); }, b); });

  if (!ctl.runUntil(suspended, point))
    return failure("suspended thread never reached " + std::string(toString(point)));
  ctl.runToCompletion(runner);
  if (auto e = ctl.error(runner)) return failure("runner failed: " + describe(e));

  PropertyResult r;
  r.count = static_cast<std::size_t>(b.attempts);
  if (b.commits != 1 || b.attempts > 2) {
    r.ok = false;
    r.detail = "runner needed " + std::to_string(b.attempts) + " attempts while others were suspended at " +
               std::string(toString(point));
  }

  ctl.finishAll();
  for (std::size_t i = 0; i < ctl.size(); ++i)
    if (auto e = ctl.error(i)) return failure("thread " + std::to_string(i) + " failed: " + describe(e));
  if (auto bad = s->audit()) return failure("audit after scenario: " + *bad);

  const int commits = a.commits + b.commits + c.commits;
  switch (kind) {
    case StructureKind::HashTable:
      if (s->apply(ds::OpName::Get, kKeyA) != 100 + static_cast<std::uint64_t>(commits))
        return failure("counter key does not reflect every committed increment");
      break;
    case StructureKind::SkipList:
      if (s->apply(ds::OpName::Get, kKeyA) != 100 || !s->apply(ds::OpName::Get, kKeyB))
        return failure("skiplist keys lost");
      break;
    case StructureKind::Queue:
      if (s->contents().size() != 2) return failure("queue length changed");
      break;
  }
  return r;
}

PropertyResult abortRollback(StructureKind kind, std::size_t transactions, std::uint64_t seed) {
  constexpr std::uint64_t kKeys = 64;
  TxManager mgr;
  std::mt19937_64 rng(seed);
  PropertyResult r;
  {
    auto s = ds::makeStructure(kind, mgr, false, 256);
    for (std::uint64_t k = 0; k < kKeys; k += 2) {
      if (kind == StructureKind::HashTable) s->apply(ds::OpName::Put, k, k);
      if (kind == StructureKind::SkipList) s->apply(ds::OpName::Insert, k, k);
      if (kind == StructureKind::Queue) s->apply(ds::OpName::Enqueue, k);
    }
    mgr.epochCollect();
    const auto base = mgr.counters().outstanding();

    static constexpr HookPoint remotePoints[] = {HookPoint::AfterLoad, HookPoint::AfterInstall,
                                                 HookPoint::BeforeValidate};
    for (std::size_t i = 0; i < transactions; ++i) {
      const auto before = s->contents();
      const int ops = 1 + static_cast<int>(rng() % 10);
      const bool remote = rng() % 3 == 0;
      const int abortAt = static_cast<int>(rng() % (ops + 1));
      const HookPoint point = remotePoints[rng() % 3];
      RemoteAbort sink(mgr, point, point == HookPoint::BeforeValidate ? 1 : 1 + static_cast<int>(rng() % 3));
      bool committed = false;
      try {
        mgr.txBegin();
        SinkGuard guard(remote ? &sink : nullptr);
        for (int j = 0; j < ops; ++j) {
          if (!remote && j == abortAt) mgr.txAbort();
          randomOp(*s, rng, kKeys);
        }
        if (remote && (sink.fired || point == HookPoint::BeforeValidate))
          mgr.txEnd();
        else
          mgr.txAbort();
        committed = true;
      } catch (const TransactionAborted&) {
      }
      if (committed) return failure("transaction " + std::to_string(i) + " committed despite a forced abort");
      if (s->contents() != before) return failure("contents changed by aborted transaction " + std::to_string(i));
      if (auto bad = s->audit()) return failure("audit after abort " + std::to_string(i) + ": " + *bad);
      ++r.count;
    }
    mgr.epochCollect();
    const auto after = mgr.counters().outstanding();
    if (after != base)
      return failure("allocation balance off by " + std::to_string(after - base) + " after collect");
    if (static_cast<std::int64_t>(s->reachableNodes()) != after)
      return failure("outstanding blocks differ from reachable nodes");
  }
  mgr.epochCollect();
  if (mgr.counters().outstanding() != 0) return failure("blocks leaked at teardown");
  return r;
}

PropertyResult readOwnWrites(std::size_t trials, std::uint64_t seed) {
  TxManager mgr;
  auto table = ds::makeStructure(StructureKind::HashTable, mgr, false, 1024);
  auto skip = ds::makeStructure(StructureKind::SkipList, mgr);
  auto queue = ds::makeStructure(StructureKind::Queue, mgr);
  std::mt19937_64 rng(seed);
  PropertyResult r;
  for (std::size_t i = 0; i < trials; ++i) {
    const auto k = rng() % 4096;
    const auto v = rng();
    try {
      mgr.txBegin();
      table->apply(ds::OpName::Put, k, v);
      const auto got = table->apply(ds::OpName::Get, k);
      mgr.txEnd();
      if (got != v) return failure("hash table get after put in trial " + std::to_string(i));

      mgr.txBegin();
      skip->apply(ds::OpName::Remove, k);
      skip->apply(ds::OpName::Insert, k, v);
      const auto sgot = skip->apply(ds::OpName::Get, k);
      mgr.txEnd();
      if (sgot != v) return failure("skiplist get after insert in trial " + std::to_string(i));

      mgr.txBegin();
      queue->apply(ds::OpName::Enqueue, v);
      const auto d = queue->apply(ds::OpName::Dequeue);
      mgr.txEnd();
      if (d != v) return failure("dequeue after enqueue in trial " + std::to_string(i));
      if (!queue->contents().empty()) return failure("queue not empty after trial " + std::to_string(i));
    } catch (const TransactionAborted&) {
      return failure("uncontended transaction aborted in trial " + std::to_string(i));
    }
    ++r.count;
  }
  return r;
}

namespace {

struct ScheduleRun {
  std::size_t steps = 0;
  PropertyResult verdict;
};

ScheduleRun runSchedule(int first, const std::vector<std::size_t>& switches) {
  ScheduleRun out;
  TxManager mgr;
  auto table = ds::makeStructure(StructureKind::HashTable, mgr, false, 4);
  HistoryRecorder rec(mgr);
  for (auto k : {kKeyA, kKeyB}) {
    rec.recordSetup(0, ds::OpName::Put, {k, 1}, table->apply(ds::OpName::Put, k, 1));
  }

  auto body = [&](int t) {
    for (int j = 0; j < 2; ++j) {
      const std::uint64_t target = (t + j) % 2 == 0 ? kKeyA : kKeyB;
      for (int attempt = 0;; ++attempt) {
        if (attempt == 100000) throw std::runtime_error("transaction still aborting after retry cap");
        mgr.txBegin();
        rec.beginTx();
        auto inv = rec.now();
        const auto a = table->apply(ds::OpName::Get, kKeyA);
        rec.op(0, ds::OpName::Get, {kKeyA}, a, inv);
        inv = rec.now();
        const auto b = table->apply(ds::OpName::Get, kKeyB);
        rec.op(0, ds::OpName::Get, {kKeyB}, b, inv);
        const auto nv = a.value_or(0) + b.value_or(0) + 1;
        inv = rec.now();
        const auto prior = table->apply(ds::OpName::Put, target, nv);
        rec.op(0, ds::OpName::Put, {target, nv}, prior, inv);
        try {
          mgr.txEnd();
        } catch (const TransactionAborted&) {
          rec.abortTx();
          continue;
        }
        rec.commitTx();
        break;
      }
    }
  };

  {
    Controller ctl;
    const std::size_t ids[2] = {ctl.spawn([&] { body(0); }), ctl.spawn([&] { body(1); })};
    int cur = first;
    std::size_t next = 0;
    while (!ctl.finished(ids[0]) || !ctl.finished(ids[1])) {
      if (next < switches.size() && out.steps == switches[next]) {
        cur = 1 - cur;
        ++next;
      }
      if (ctl.finished(ids[cur])) cur = 1 - cur;
      ctl.step(ids[cur]);
      ++out.steps;
    }
    ctl.finishAll();
    for (int i = 0; i < 2; ++i)
      if (auto e = ctl.error(ids[i])) {
        out.verdict = failure("thread failed: " + describe(e));
        return out;
      }
  }

  const auto h = rec.merged();
  const auto v = checkStrictSerializability(h);
  if (!v) {
    out.verdict = failure(v.message);
    return out;
  }
  const auto model = replayCommitted(h);
  std::vector<std::uint64_t> expected;
  for (auto [k, val] : model.mapOf(0)) {
    expected.push_back(k);
    expected.push_back(val);
  }
  if (table->contents() != expected) out.verdict = failure("final contents differ from commit-order replay");
  if (auto bad = table->audit()) out.verdict = failure("audit: " + *bad);
  return out;
}

std::string describeSchedule(int first, const std::vector<std::size_t>& sw) {
  std::string s = "start T" + std::to_string(first) + ", switches at";
  for (auto x : sw) s += " " + std::to_string(x);
  return s;
}

bool exploreFrom(int first, std::vector<std::size_t>& sw, int budget, PropertyResult& total) {
  const ScheduleRun run = runSchedule(first, sw);
  ++total.count;
  if (!run.verdict) {
    total.ok = false;
    total.detail = describeSchedule(first, sw) + ": " + run.verdict.detail;
    return false;
  }
  if (budget == 0) return true;
  const std::size_t from = sw.empty() ? 1 : sw.back() + 1;
  for (std::size_t j = from; j < run.steps; ++j) {
    sw.push_back(j);
    const bool fine = exploreFrom(first, sw, budget - 1, total);
    sw.pop_back();
    if (!fine) return false;
  }
  return true;
}

}  // namespace

PropertyResult exploreInterleavings(int preemptions) {
  PropertyResult total;
  for (int first = 0; first < 2; ++first) {
    std::vector<std::size_t> sw;
    if (!exploreFrom(first, sw, preemptions, total)) break;
  }
  return total;
}

PropertyResult standaloneLinearizability(StructureKind kind, std::uint64_t seed, int rounds) {
  constexpr int kThreads = 3;
  constexpr int kOpsPerThread = 6;
  PropertyResult r;
  std::mt19937_64 seeds(seed);
  for (int round = 0; round < rounds; ++round) {
    TxManager mgr;
    auto s = ds::makeStructure(kind, mgr, false, 4);
    HistoryRecorder rec(mgr);
    std::atomic<int> ready{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < kThreads; ++t) {
      threads.emplace_back([&, t, tseed = seeds()] {
        std::mt19937_64 rng(tseed);
        ready.fetch_add(1);
        while (ready.load() < kThreads) std::this_thread::yield();
        for (int i = 0; i < kOpsPerThread; ++i) {
          ds::OpName op;
          std::vector<std::uint64_t> args;
          const std::uint64_t k = rng() % 2;
          const std::uint64_t v = static_cast<std::uint64_t>(t) * 100 + i;
          switch (kind) {
            case StructureKind::HashTable: {
              static constexpr ds::OpName ops[] = {ds::OpName::Get, ds::OpName::Put, ds::OpName::Remove};
              op = ops[rng() % 3];
              break;
            }
            case StructureKind::SkipList: {
              static constexpr ds::OpName ops[] = {ds::OpName::Get, ds::OpName::Insert, ds::OpName::Remove};
              op = ops[rng() % 3];
              break;
            }
            default:
              op = rng() % 2 ? ds::OpName::Enqueue : ds::OpName::Dequeue;
          }
          if (op == ds::OpName::Put || op == ds::OpName::Insert) args = {k, v};
          else if (op == ds::OpName::Enqueue) args = {v};
          else if (op != ds::OpName::Dequeue) args = {k};
          const auto inv = rec.now();
          const auto res = s->apply(op, args.empty() ? 0 : args[0], args.size() > 1 ? args[1] : 0);
          rec.recordStandalone(0, op, args, res, inv);
          if (rng() % 2) std::this_thread::yield();
        }
      });
    }
    for (auto& th : threads) th.join();
    const auto v = checkLinearizable(rec.merged());
    if (!v) return failure("round " + std::to_string(round) + ": " + v.message);
    r.count += v.events;
  }
  return r;
}

}  // namespace medley::verify
