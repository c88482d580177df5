// Python bindings: transactions over the three structures, the benchmark
// drivers, and the history checker.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "medley/bench/workload.hpp"
#include "medley/ds/any.hpp"
#include "medley/verify/checker.hpp"
#include "medley/verify/seeded.hpp"

namespace py = pybind11;
using namespace medley;

namespace {

ds::StructureKind kindOf(const std::string& s) {
  const auto k = ds::parseStructureKind(s);
  if (!k) throw py::value_error("unknown structure '" + s + "'");
  return *k;
}

/// `with mgr.transaction():` begins, then commits on normal exit or aborts
/// when the body raised.
class TxScope {
 public:
  explicit TxScope(TxManager& mgr) : mgr_(mgr) {}
  void enter() { mgr_.txBegin(); }
  bool exit(const py::object& excType, const py::object&, const py::object&) {
    if (excType.is_none()) {
      mgr_.txEnd();  // may raise TransactionAborted
      return false;
    }
    if (mgr_.inTransaction()) {
      try {
        mgr_.txAbort();
      } catch (const TransactionAborted&) {
      }
    }
    return false;
  }

 private:
  TxManager& mgr_;
};

py::dict statsDict(const bench::RunStats& s) {
  py::dict d;
  d["elapsed_seconds"] = s.elapsedSeconds;
  d["committed"] = s.committed;
  d["aborted"] = s.aborted;
  d["attempted"] = s.attempted;
  d["operations"] = s.operations;
  d["committed_per_second"] = s.committedPerSecond;
  d["mean_latency_ns"] = s.meanLatencyNs;
  d["final_contents"] = s.finalContents;
  d["audit_error"] = s.auditError;
  return d;
}

}  // namespace

PYBIND11_MODULE(medley, m) {
  m.doc() = "Composable nonblocking transactions over a hash table, skiplist and queue";

  py::register_exception<TransactionAborted>(m, "TransactionAborted");

  py::class_<TxScope>(m, "_TxScope")
      .def("__enter__", [](TxScope& s) { s.enter(); })
      .def("__exit__", &TxScope::exit);

  py::class_<TxManager>(m, "TxManager")
      .def(py::init<>())
      .def("tx_begin", &TxManager::txBegin)
      .def("tx_end", &TxManager::txEnd)
      .def("tx_abort", &TxManager::txAbort)
      .def("validate_reads", &TxManager::validateReads)
      .def("in_transaction", &TxManager::inTransaction)
      .def("epoch_collect", &TxManager::epochCollect)
      .def(
          "transaction", [](TxManager& mgr) { return TxScope(mgr); }, py::keep_alive<0, 1>())
      .def("counters", [](const TxManager& mgr) {
        const auto c = mgr.counters();
        py::dict d;
        d["allocs"] = c.allocs;
        d["frees"] = c.frees;
        d["retired"] = c.retired;
        d["reclaimed"] = c.reclaimed;
        d["commits"] = c.commits;
        d["aborts"] = c.aborts;
        d["outstanding"] = c.outstanding();
        return d;
      });

  py::class_<ds::AnyStructure>(m, "Structure")
      .def_property_readonly("kind", [](const ds::AnyStructure& s) { return std::string(ds::toString(s.kind())); })
      .def_property_readonly("original", &ds::AnyStructure::original)
      .def("get", [](ds::AnyStructure& s, std::uint64_t k) { return s.apply(ds::OpName::Get, k); })
      .def("put", [](ds::AnyStructure& s, std::uint64_t k, std::uint64_t v) { return s.apply(ds::OpName::Put, k, v); })
      .def("insert",
           [](ds::AnyStructure& s, std::uint64_t k, std::uint64_t v) {
             return s.apply(ds::OpName::Insert, k, v).value_or(0) == 1;
           })
      .def("remove", [](ds::AnyStructure& s, std::uint64_t k) { return s.apply(ds::OpName::Remove, k); })
      .def("enqueue", [](ds::AnyStructure& s, std::uint64_t v) { s.apply(ds::OpName::Enqueue, v); })
      .def("dequeue", [](ds::AnyStructure& s) { return s.apply(ds::OpName::Dequeue); })
      .def("contents", &ds::AnyStructure::contents)
      .def("audit", &ds::AnyStructure::audit);

  m.def(
      "make_structure",
      [](const std::string& kind, TxManager& mgr, bool original, std::size_t buckets) {
        return ds::makeStructure(kindOf(kind), mgr, original, buckets);
      },
      py::arg("kind"), py::arg("manager"), py::arg("original") = false, py::arg("buckets") = 1 << 16,
      py::keep_alive<0, 2>());

  m.def(
      "run_bench",
      [](const std::string& structure, const std::string& mode, unsigned threads, double seconds,
         std::uint64_t transactions, const std::string& ratio, unsigned txMin, unsigned txMax, std::uint64_t keySpace,
         std::uint64_t prefill, std::uint64_t seed, bool record) {
        bench::WorkloadConfig c;
        c.structure = kindOf(structure);
        const auto md = bench::parseMode(mode);
        if (!md) throw py::value_error("unknown mode '" + mode + "'");
        c.mode = *md;
        const auto r = bench::parseRatio(ratio);
        if (!r) throw py::value_error("ratio must look like G:I:R");
        c.ratio = *r;
        c.threads = threads;
        c.seconds = seconds;
        c.transactions = transactions;
        c.txSizeMin = txMin;
        c.txSizeMax = txMax;
        c.keySpace = keySpace;
        c.prefill = prefill;
        c.seed = seed;
        c.record = record;
        c.buckets = 1 << 16;
        if (auto bad = c.validate()) throw py::value_error(*bad);
        bench::RunStats st;
        {
          py::gil_scoped_release release;
          st = bench::runBench(c);
        }
        py::dict d = statsDict(st);
        if (record) {
          const auto v = verify::checkStrictSerializability(st.history);
          d["serializable"] = v.ok;
          d["checked_transactions"] = v.transactions;
        }
        return d;
      },
      py::arg("structure") = "hashtable", py::arg("mode") = "txOn", py::arg("threads") = 1,
      py::arg("seconds") = 1.0, py::arg("transactions") = 0, py::arg("ratio") = "0:1:1", py::arg("tx_min") = 1,
      py::arg("tx_max") = 10, py::arg("keyspace") = 100000, py::arg("prefill") = 50000, py::arg("seed") = 1,
      py::arg("record") = false);

  m.def(
      "run_transfer_bench",
      [](unsigned threads, std::uint64_t accounts, std::uint64_t initial, std::uint64_t transfers,
         double forcedAbortRate, std::uint64_t seed) {
        bench::TransferConfig c;
        c.threads = threads;
        c.accounts = accounts;
        c.initialBalance = initial;
        c.transfers = transfers;
        c.forcedAbortRate = forcedAbortRate;
        c.seed = seed;
        bench::TransferStats st;
        {
          py::gil_scoped_release release;
          st = bench::runTransferBench(c);
        }
        py::dict d = statsDict(st.run);
        d["initial_total"] = st.initialTotal;
        d["final_total"] = st.finalTotal;
        d["negative_balances"] = st.negativeBalances;
        d["insufficient_funds"] = st.insufficientFunds;
        d["forced_aborts"] = st.forcedAborts;
        d["conserved"] = st.conserved();
        return d;
      },
      py::arg("threads") = 4, py::arg("accounts") = 1024, py::arg("initial") = 1000, py::arg("transfers") = 10000,
      py::arg("forced_abort_rate") = 0.0, py::arg("seed") = 1);

  m.def(
      "check_history",
      [](const std::string& text) {
        std::istringstream in(text);
        const auto h = verify::readHistory(in);
        const auto v = verify::checkStrictSerializability(h);
        return py::make_tuple(v.ok, v.message);
      },
      py::arg("text"), "Checks a history dump (the medley_bench --record-history format).");

  m.def("seeded_violations_rejected", [] {
    std::size_t n = 0;
    for (const auto& s : verify::seededViolations()) n += !verify::checkStrictSerializability(s.history).ok;
    return n;
  });
}
