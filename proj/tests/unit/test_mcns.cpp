#include "testing.hpp"

#include <random>
#include <thread>

#include "medley/descriptor.hpp"
#include "medley/ds/hash_table.hpp"
#include "support.hpp"

using namespace medley;
using medley::test::Probe;
using medley::test::setPair;
using medley::test::tryTx;

TEST_CASE("status word layout and next serial") {
  const StatusWord w = StatusWord::make(0, 7, TxState::Committed);
  CHECK(w.raw == 30);
  const StatusWord n = w.next();
  CHECK(n.raw == 32);
  CHECK(n.serial() == 8);
  CHECK(n.state() == TxState::InPrep);

  const StatusWord t = StatusWord::make(9, 123, TxState::InProg);
  CHECK(t.tid() == 9);
  CHECK(t.serial() == 123);
  CHECK((t.raw >> 50) == 9);
  CHECK(t.with(TxState::Aborted).sameInstance(t));
  CHECK_FALSE(t.next().sameInstance(t));
}

TEST_CASE("begin on a fresh descriptor moves to serial 1, empty sets") {
  StampSource stamps;
  Descriptor d(3, stamps);
  CHECK(d.status().serial() == 0);
  d.begin();
  CHECK(d.status().serial() == 1);
  CHECK(d.status().state() == TxState::InPrep);
  CHECK(d.status().tid() == 3);
  CHECK(d.readCount() == 0);
  CHECK(d.writeCount() == 0);
}

TEST_CASE("after an aborted serial 5, stale entries do not validate") {
  StampSource stamps;
  Descriptor d(1, stamps);
  for (int i = 0; i < 5; ++i) d.begin();
  CasCell c(10);
  d.recordRead(c, c.loadPair());
  const StatusWord five = d.status();
  REQUIRE(five.serial() == 5);
  CHECK(d.abort(five));
  d.begin();
  CHECK(d.status().serial() == 6);
  CHECK(d.status().state() == TxState::InPrep);
  // A helper still holding serial 5 sees the instance changed.
  CHECK_FALSE(d.validateReads(five));
  CHECK(d.readCount() == 0);
}

TEST_CASE("all 16 status transitions: exactly the 4 legal arms succeed") {
  const TxState states[] = {TxState::InPrep, TxState::InProg, TxState::Committed, TxState::Aborted};
  // Oracle: the four arms of the state machine, listed by hand.
  auto legal = [](TxState f, TxState t) {
    return (f == TxState::InPrep && t == TxState::InProg) || (f == TxState::InPrep && t == TxState::Aborted) ||
           (f == TxState::InProg && t == TxState::Committed) || (f == TxState::InProg && t == TxState::Aborted);
  };
  int accepted = 0, rejected = 0;
  StampSource stamps;
  for (TxState from : states) {
    for (TxState to : states) {
      Descriptor d(2, stamps);
      d.begin();
      // Drive to `from` via legal edges.
      if (from == TxState::InProg || from == TxState::Committed) REQUIRE(d.setReady());
      if (from == TxState::Committed) REQUIRE(d.commit(d.status()));
      if (from == TxState::Aborted) REQUIRE(d.abort(d.status()));
      REQUIRE(d.status().state() == from);
      const StatusWord before = d.status();
      const bool ok = d.stsCas(before, from, to);
      CHECK(ok == legal(from, to));
      CHECK(isLegalTransition(from, to) == legal(from, to));
      if (ok) {
        CHECK(d.status() == before.with(to));
        ++accepted;
      } else {
        CHECK(d.status() == before);
        ++rejected;
      }
    }
  }
  CHECK(accepted == 4);
  CHECK(rejected == 12);
}

TEST_CASE("nbtcLoad of a plain cell buffers (value, counter)") {
  TxManager mgr;
  CasCell c;
  setPair(c, 42, 6);
  mgr.txBegin();
  CHECK(c.nbtcLoad() == 42);
  const auto* pending = mgr.context().pendingFor(c);
  REQUIRE(pending != nullptr);
  CHECK(pending->pair == Pair{42, 6});
  CHECK_FALSE(pending->own);
  mgr.txEnd();
}

TEST_CASE("nbtcLoad of a cell under our own descriptor serves the new value") {
  TxManager mgr;
  CasCell c;
  setPair(c, 5, 6);
  mgr.txBegin();
  REQUIRE(c.nbtcCompareExchange(5, 99, true, true) == CasOutcome::Speculated);
  CHECK(c.loadPair() == Pair{mgr.descriptor().ref(), 7});
  CHECK_FALSE(mgr.context().specInterval);
  CHECK(c.nbtcLoad() == 99);
  CHECK(mgr.context().specInterval);
  mgr.txEnd();
  CHECK(c.loadPair() == Pair{99, 8});
}

namespace {

/// A descriptor owned by no thread, installed by hand.
struct Foreign {
  StampSource stamps;
  Descriptor d{4000, stamps};
  void install(CasCell& c, std::uint64_t desired) {
    const Pair old = c.loadPair();
    d.recordWrite(c, old, desired);
    REQUIRE(c.casPair(old, {d.ref(), old.counter + 1}));
  }
};

}  // namespace

TEST_CASE("loading over a foreign InPrep descriptor aborts it and restores the cell") {
  CasCell c;
  setPair(c, 17, 8);
  Foreign f;
  f.d.begin();
  f.install(c, 55);
  CHECK(c.loadPair() == Pair{f.d.ref(), 9});
  TxManager mgr;
  mgr.txBegin();
  CHECK(c.nbtcLoad() == 17);
  mgr.txEnd();
  CHECK(f.d.status().state() == TxState::Aborted);
  CHECK(c.loadPair() == Pair{17, 10});
}

TEST_CASE("two loads then addToReadSet keep only the latest pair") {
  TxManager mgr;
  Probe probe(mgr);
  CasCell c;
  setPair(c, 42, 6);
  mgr.txBegin();
  CHECK(c.nbtcLoad() == 42);
  std::thread([&] { c.store(43); }).join();  // (43, 8)
  CHECK(c.nbtcLoad() == 43);
  probe.addToReadSet(c, 43);
  CHECK(mgr.descriptor().readCount() == 1);
  CHECK(mgr.validateReads());
  mgr.txEnd();
}

TEST_CASE("addToReadSet records the buffered pair") {
  TxManager mgr;
  Probe probe(mgr);
  CasCell c;
  setPair(c, 42, 6);
  mgr.txBegin();
  CHECK(c.nbtcLoad() == 42);
  probe.addToReadSet(c, 42);
  CHECK(mgr.descriptor().readCount() == 1);
  CHECK(mgr.validateReads());
  std::thread([&] { c.cas(42, 44); }).join();
  CHECK_FALSE(mgr.validateReads());
  CHECK_THROWS_AS(mgr.txEnd(), TransactionAborted);
}

TEST_CASE("non-critical nbtcCAS advances the counter by two") {
  TxManager mgr;
  CasCell c;
  setPair(c, 5, 4);
  // Outside any transaction.
  CHECK(c.nbtcCas(5, 9, true, true));
  CHECK(c.loadPair() == Pair{9, 6});
  // Inside a transaction but outside the speculation interval.
  setPair(c, 5, 4);
  mgr.txBegin();
  CHECK(c.nbtcCompareExchange(5, 9, false, false) == CasOutcome::Applied);
  CHECK(c.loadPair() == Pair{9, 6});
  CHECK(mgr.descriptor().writeCount() == 0);
  mgr.txEnd();
}

TEST_CASE("critical nbtcCAS installs the descriptor and records the write") {
  TxManager mgr;
  CasCell c;
  setPair(c, 5, 4);
  mgr.txBegin();
  CHECK(c.nbtcCas(5, 9, true, true));
  CHECK(c.loadPair() == Pair{mgr.descriptor().ref(), 5});
  WriteEntry* e = mgr.descriptor().findWrite(c);
  REQUIRE(e != nullptr);
  CHECK(e->oldValue.load() == 5);
  CHECK(e->oldCounter.load() == 4);
  CHECK(e->newValue.load() == 9);
  CHECK_FALSE(mgr.context().specInterval);
  mgr.txEnd();
}

TEST_CASE("nbtcCAS with a stale expected value fails and records nothing") {
  TxManager mgr;
  CasCell c;
  setPair(c, 7, 4);
  mgr.txBegin();
  CHECK_FALSE(c.nbtcCas(5, 9, true, true));
  CHECK(mgr.descriptor().writeCount() == 0);
  CHECK(c.loadPair() == Pair{7, 4});
  mgr.txEnd();
}

TEST_CASE("nbtcCAS on a cell we already own rewrites the entry") {
  TxManager mgr;
  CasCell c;
  setPair(c, 5, 4);
  mgr.txBegin();
  REQUIRE(c.nbtcCas(5, 9, true, true));
  CHECK(c.nbtcCompareExchange(9, 11, true, true) == CasOutcome::Speculated);
  WriteEntry* e = mgr.descriptor().findWrite(c);
  REQUIRE(e != nullptr);
  CHECK(e->oldValue.load() == 5);
  CHECK(e->oldCounter.load() == 4);
  CHECK(e->newValue.load() == 11);
  CHECK_FALSE(c.nbtcCas(9, 12, true, true));  // expected compares against 11
  mgr.txEnd();
  CHECK(c.loadPair() == Pair{11, 6});
}

TEST_CASE("tryFinalize helps an InProg descriptor commit") {
  CasCell c;
  setPair(c, 5, 4);
  Foreign f;
  f.d.begin();
  f.install(c, 9);
  REQUIRE(f.d.setReady());
  CHECK(c.load() == 9);
  CHECK(f.d.status().state() == TxState::Committed);
  CHECK(c.loadPair() == Pair{9, 6});
}

TEST_CASE("tryFinalize with a stale observation returns without touching status") {
  CasCell c;
  setPair(c, 5, 4);
  Foreign f;
  f.d.begin();
  f.install(c, 9);
  const StatusWord before = f.d.status();
  f.d.tryFinalize(c, Pair{f.d.ref(), 3});
  CHECK(f.d.status() == before);
  CHECK(c.loadPair() == Pair{f.d.ref(), 5});
  f.d.abort(before);
  f.d.uninstall(f.d.status());
  CHECK(c.loadPair() == Pair{5, 6});
}

TEST_CASE("validateReads") {
  StampSource stamps;
  Descriptor d(7, stamps);
  d.begin();

  SUBCASE("empty read set") { CHECK(d.validateReads(d.status())); }

  SUBCASE("all cells unchanged") {
    CasCell a(1), b(2);
    d.recordRead(a, a.loadPair());
    d.recordRead(b, b.loadPair());
    CHECK(d.validateReads(d.status()));
  }

  SUBCASE("same value, counter advanced") {
    CasCell a(1);
    d.recordRead(a, a.loadPair());
    REQUIRE(a.cas(1, 2));
    REQUIRE(a.cas(2, 1));
    CHECK(a.loadPair().value == 1);
    CHECK_FALSE(d.validateReads(d.status()));
  }

  SUBCASE("ABA through remove and re-insert of the same key") {
    TxManager mgr;
    ds::HashTable<> ht(mgr, 1);
    ht.put(5, 7);
    mgr.txBegin();
    CHECK(ht.get(5) == 7);
    std::thread([&] {
      ht.remove(5);
      ht.put(5, 7);
    }).join();
    CHECK_FALSE(mgr.validateReads());
    CHECK_THROWS_AS(mgr.txEnd(), TransactionAborted);
  }

  SUBCASE("owner moved to a new serial") {
    CasCell a(1);
    d.recordRead(a, a.loadPair());
    const StatusWord old = d.status();
    d.abort(old);
    d.begin();
    CHECK_FALSE(d.validateReads(old));
  }
}

TEST_CASE("uninstall arms") {
  StampSource stamps;
  Descriptor d(8, stamps);
  CasCell c;
  setPair(c, 5, 4);
  d.begin();
  d.recordWrite(c, {5, 4}, 9);
  REQUIRE(c.casPair({5, 4}, {d.ref(), 5}));

  SUBCASE("commit") {
    REQUIRE(d.setReady());
    REQUIRE(d.commit(d.status()));
    d.uninstall(d.status());
    CHECK(c.loadPair() == Pair{9, 6});
    // A second pass (a late helper) changes nothing.
    d.uninstall(d.status());
    CHECK(c.loadPair() == Pair{9, 6});
  }
  SUBCASE("abort") {
    REQUIRE(d.abort(d.status()));
    d.uninstall(d.status());
    CHECK(c.loadPair() == Pair{5, 6});
  }
}

TEST_CASE("txEnd commits two writes and runs cleanups") {
  TxManager mgr;
  Probe probe(mgr);
  CasCell a(1), b(2);
  int ran = 0;
  mgr.txBegin();
  {
    Composable::OpStarter op(mgr);
    REQUIRE(a.nbtcCas(1, 10, true, true));
    REQUIRE(b.nbtcCas(2, 20, true, true));
    probe.addToCleanups([&] { ++ran; });
  }
  CHECK(ran == 0);
  mgr.txEnd();
  CHECK(ran == 1);
  CHECK(a.loadPair() == Pair{10, 2});
  CHECK(b.loadPair() == Pair{20, 2});
}

TEST_CASE("txEnd aborts when a read cell changed, restoring writes") {
  TxManager mgr;
  Probe probe(mgr);
  CasCell r(1), w(2);
  mgr.txBegin();
  CHECK(r.nbtcLoad() == 1);
  probe.addToReadSet(r, 1);
  REQUIRE(w.nbtcCas(2, 20, true, true));
  std::thread([&] { r.store(5); }).join();
  CHECK_THROWS_AS(mgr.txEnd(), TransactionAborted);
  CHECK(w.loadPair() == Pair{2, 2});
  CHECK_FALSE(mgr.inTransaction());
}

TEST_CASE("txEnd takes the abort path when someone else aborted us") {
  TxManager mgr;
  CasCell w(2);
  mgr.txBegin();
  REQUIRE(w.nbtcCas(2, 20, true, true));
  Descriptor& mine = mgr.descriptor();
  std::thread([&] { CHECK(mine.abort(mine.status())); }).join();
  CHECK_THROWS_AS(mgr.txEnd(), TransactionAborted);
  CHECK(w.loadPair() == Pair{2, 2});
}

TEST_CASE("txAbort") {
  TxManager mgr;
  Probe probe(mgr);

  SUBCASE("empty write set: status and allocation undo only") {
    const auto before = mgr.counters();
    mgr.txBegin();
    struct Block {
      int x = 0;
    };
    probe.tNew<Block>();
    CHECK_THROWS_AS(mgr.txAbort(), TransactionAborted);
    CHECK(mgr.descriptor().status().state() == TxState::Aborted);
    const auto after = mgr.counters();
    CHECK(after.allocs == before.allocs + 1);
    CHECK(after.outstanding() == before.outstanding());
  }

  SUBCASE("three installs restored with counters net +2") {
    CasCell cells[3];
    for (int i = 0; i < 3; ++i) setPair(cells[i], 100 + i, 2 * i);
    mgr.txBegin();
    for (int i = 0; i < 3; ++i) REQUIRE(cells[i].nbtcCas(100 + i, 200 + i, true, true));
    CHECK_THROWS_AS(mgr.txAbort(), TransactionAborted);
    for (int i = 0; i < 3; ++i)
      CHECK(cells[i].loadPair() == Pair{static_cast<std::uint64_t>(100 + i), static_cast<std::uint64_t>(2 * i + 2)});
  }
}

TEST_CASE("manager validateReads") {
  TxManager mgr;
  Probe probe(mgr);
  CasCell c(3);
  mgr.txBegin();
  CHECK(mgr.validateReads());  // empty
  CHECK(c.nbtcLoad() == 3);
  probe.addToReadSet(c, 3);
  CHECK(mgr.validateReads());
  std::thread([&] {
    // A conflicting committed writer.
    CHECK(tryTx(mgr, [&] { REQUIRE(c.nbtcCas(3, 4, true, true)); }));
  }).join();
  CHECK_FALSE(mgr.validateReads());
  CHECK_THROWS_AS(mgr.txEnd(), TransactionAborted);
}

TEST_CASE("parity invariant over 10^6 randomized install/uninstall cycles") {
  TxManager mgr;
  CasCell cells[4];
  // Oracle: a hand model of each cell's (value, counter).
  Pair model[4];
  std::mt19937_64 rng(12345);
  for (int step = 0; step < 1'000'000; ++step) {
    const int i = static_cast<int>(rng() % 4);
    const std::uint64_t nv = rng() & ~std::uint64_t{1};
    switch (rng() % 3) {
      case 0: {  // install, commit
        mgr.txBegin();
        REQUIRE(cells[i].nbtcCas(model[i].value, nv, true, true));
        if ((cells[i].loadPair().counter & 1) != 1) FAIL("installed cell has an even counter");
        mgr.txEnd();
        model[i] = {nv, model[i].counter + 2};
        break;
      }
      case 1: {  // install, abort
        mgr.txBegin();
        REQUIRE(cells[i].nbtcCas(model[i].value, nv, true, true));
        try {
          mgr.txAbort();
        } catch (const TransactionAborted&) {
        }
        model[i].counter += 2;
        break;
      }
      default:  // plain CAS
        REQUIRE(cells[i].cas(model[i].value, nv));
        model[i] = {nv, model[i].counter + 2};
    }
    if (cells[i].loadPair() != model[i]) FAIL("cell diverged from the model at step " << step);
  }
  for (int i = 0; i < 4; ++i) CHECK(cells[i].loadPair().counter % 2 == 0);
}
