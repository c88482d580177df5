#include "testing.hpp"

#include <atomic>
#include <set>
#include <thread>
#include <vector>

#include "medley/ds/hash_table.hpp"
#include "medley/epoch_reclaimer.hpp"
#include "medley/thread_registry.hpp"
#include "support.hpp"

using namespace medley;
using medley::test::Probe;

TEST_CASE("OpStarter mode follows the thread's transaction state") {
  TxManager mgr;
  CasCell c(5);
  {
    Composable::OpStarter op(mgr);
    CHECK(op.mode() == OpMode::Standalone);
    CHECK(c.nbtcCompareExchange(5, 9, true, true) == CasOutcome::Applied);
    CHECK(c.loadPair() == Pair{9, 2});
  }
  mgr.txBegin();
  {
    Composable::OpStarter outer(mgr);
    CHECK(outer.mode() == OpMode::Transactional);
    {
      Composable::OpStarter inner(mgr);
      CHECK(inner.mode() == OpMode::Transactional);
      CHECK(currentContext()->descriptor == &mgr.descriptor());
    }
    CHECK(currentContext() == &mgr.context());
  }
  mgr.txEnd();
  CHECK_FALSE(mgr.inTransaction());
}

TEST_CASE("nested txBegin is rejected") {
  TxManager mgr;
  mgr.txBegin();
  CHECK_THROWS_AS(mgr.txBegin(), std::logic_error);
  mgr.txEnd();
  CHECK_THROWS_AS(mgr.txEnd(), std::logic_error);
}

TEST_CASE("cleanups: standalone now, transactional at commit, never on abort") {
  TxManager mgr;
  ds::HashTable<> ht(mgr, 1);

  SUBCASE("standalone replace unlinks before returning") {
    ht.put(5, 7);
    CHECK(ht.put(5, 9) == 7);
    CHECK(ht.reachableNodes() == 1);
    CHECK(mgr.reclaimer().retiredTotal() == 1);
  }
  SUBCASE("transactional replace cleans up inside txEnd") {
    ht.put(5, 7);
    mgr.txBegin();
    CHECK(ht.put(5, 9) == 7);
    CHECK(mgr.reclaimer().retiredTotal() == 0);
    mgr.txEnd();
    CHECK(mgr.reclaimer().retiredTotal() == 1);
    CHECK(ht.reachableNodes() == 1);
    CHECK(ht.get(5) == 9);
  }
  SUBCASE("aborted replace never cleans up") {
    ht.put(5, 7);
    mgr.txBegin();
    CHECK(ht.put(5, 9) == 7);
    CHECK_THROWS_AS(mgr.txAbort(), TransactionAborted);
    CHECK(mgr.reclaimer().retiredTotal() == 0);
    CHECK(ht.get(5) == 7);
    CHECK(ht.reachableNodes() == 1);
    CHECK_FALSE(ht.audit());
  }
}

namespace {

struct Tracked {
  explicit Tracked(std::atomic<int>& live) : live_(live) { live_.fetch_add(1); }
  ~Tracked() { live_.fetch_sub(1); }
  std::atomic<int>& live_;
};

}  // namespace

TEST_CASE("tNew is undone on abort and kept on commit") {
  TxManager mgr;
  Probe probe(mgr);
  std::atomic<int> live{0};
  const auto before = mgr.counters().outstanding();
  mgr.txBegin();
  probe.tNew<Tracked>(live);
  CHECK(live == 1);
  CHECK_THROWS_AS(mgr.txAbort(), TransactionAborted);
  CHECK(live == 0);
  CHECK(mgr.counters().outstanding() == before);

  mgr.txBegin();
  Tracked* kept = probe.tNew<Tracked>(live);
  mgr.txEnd();
  CHECK(live == 1);
  CHECK(mgr.counters().outstanding() == before + 1);
  probe.tDelete(kept);
  CHECK(live == 0);
  CHECK(mgr.counters().outstanding() == before);
}

TEST_CASE("tRetire frees only after readers leave their regions") {
  TxManager mgr;
  Probe probe(mgr);
  std::atomic<int> live{0};
  std::atomic<int> phase{0};
  std::thread reader([&] {
    EpochGuard g(mgr.reclaimer());
    phase = 1;
    while (phase.load() != 2) std::this_thread::yield();
  });
  while (phase.load() != 1) std::this_thread::yield();
  Tracked* t = new Tracked(live);
  probe.tRetire(t);
  mgr.epochCollect();
  mgr.epochCollect();
  CHECK(live == 1);
  phase = 2;
  reader.join();
  mgr.epochCollect();
  CHECK(live == 0);
}

TEST_CASE("epoch collect") {
  EpochReclaimer r(1u << 30);
  std::atomic<int> live{0};

  SUBCASE("quiescent: 10 retired, 10 freed") {
    for (int i = 0; i < 10; ++i) r.retire(new Tracked(live));
    CHECK(r.collect() == 10);
    CHECK(live == 0);
  }
  SUBCASE("a thread pinned at an old epoch blocks everything") {
    std::atomic<int> phase{0};
    std::thread pinned([&] {
      r.enter();
      phase = 1;
      while (phase.load() != 2) std::this_thread::yield();
      r.exit();
    });
    while (phase.load() != 1) std::this_thread::yield();
    for (int i = 0; i < 10; ++i) r.retire(new Tracked(live));
    CHECK(r.collect() == 0);
    CHECK(r.collect() == 0);
    CHECK(r.pending() == 10);
    phase = 2;
    pinned.join();
    CHECK(r.collect() == 10);
  }
}

TEST_CASE("retire/collect stress: freed equals retired at quiescence") {
  EpochReclaimer r(64);
  std::atomic<int> live{0};
  std::vector<std::thread> ts;
  for (int t = 0; t < 4; ++t) {
    ts.emplace_back([&, t] {
      for (int i = 0; i < 5000; ++i) {
        EpochGuard g(r);
        r.retire(new Tracked(live));
        if (i % 97 == t) r.collect();
      }
    });
  }
  for (auto& t : ts) t.join();
  r.collect();
  CHECK(r.freedTotal() == r.retiredTotal());
  CHECK(r.retiredTotal() == 20000);
  CHECK(live == 0);
}

TEST_CASE("thread ids are dense and reused") {
  const auto mine = ThreadRegistry::currentId();
  CHECK(ThreadRegistry::currentId() == mine);
  std::set<std::uint32_t> seen;
  for (int i = 0; i < 8; ++i) std::thread([&] { seen.insert(ThreadRegistry::currentId()); }).join();
  CHECK(seen.size() == 1);  // each exited thread hands its id back
  CHECK(ThreadRegistry::highWater() < 64);
}
