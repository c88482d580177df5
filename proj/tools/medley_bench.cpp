// Benchmark driver: prefill, timed mixed transactions, CSV output.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "medley/bench/workload.hpp"
#include "medley/verify/checker.hpp"

using namespace medley;
using namespace medley::bench;

namespace {

int runTransfer(const TransferConfig& cfg) {
  const TransferStats st = runTransferBench(cfg);
  std::printf("transfer: threads=%u accounts=%llu committed=%llu aborted=%llu insufficient=%llu forced=%llu\n",
              cfg.threads, static_cast<unsigned long long>(cfg.accounts),
              static_cast<unsigned long long>(st.run.committed), static_cast<unsigned long long>(st.run.aborted),
              static_cast<unsigned long long>(st.insufficientFunds),
              static_cast<unsigned long long>(st.forcedAborts));
  std::printf("total: initial=%llu final=%llu negative=%llu missing=%llu %.1f tx/s\n",
              static_cast<unsigned long long>(st.initialTotal), static_cast<unsigned long long>(st.finalTotal),
              static_cast<unsigned long long>(st.negativeBalances),
              static_cast<unsigned long long>(st.missingAccounts), st.run.committedPerSecond);
  if (!st.conserved()) {
    std::fprintf(stderr, "conservation violated\n");
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed-transaction benchmark over the transformed structures"};

  WorkloadConfig cfg;
  std::string structure = "hashtable", ratio = "0:1:1", txsize = "1:10", csv, history;
  std::vector<std::string> modes{"txOn"};
  unsigned trials = 1;
  bool append = false, transfer = false;
  TransferConfig tcfg;

  app.add_option("--structure", structure, "hashtable, skiplist or queue")->capture_default_str();
  app.add_option("--mode", modes, "original, txOff, txOn (several allowed; 'all' for the three)")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--threads", cfg.threads)->capture_default_str();
  app.add_option("--seconds", cfg.seconds, "time cap, 0 for none")->capture_default_str();
  app.add_option("--transactions", cfg.transactions, "stop after this many committed transactions")
      ->capture_default_str();
  app.add_option("--ratio", ratio, "G:I:R weights")->capture_default_str();
  app.add_option("--txsize", txsize, "MIN:MAX operations per transaction")->capture_default_str();
  app.add_option("--keyspace", cfg.keySpace)->capture_default_str();
  app.add_option("--prefill", cfg.prefill)->capture_default_str();
  app.add_option("--buckets", cfg.buckets)->capture_default_str();
  app.add_option("--seed", cfg.seed)->capture_default_str();
  app.add_option("--trials", trials, "repetitions per mode; a mean row follows when > 1")->capture_default_str();
  app.add_option("--csv", csv, "write rows to PATH");
  app.add_flag("--append", append, "append to the CSV instead of truncating");
  app.add_flag("--pin", cfg.pin, "pin worker i to cpu i mod ncpu");
  app.add_option("--record-history", history, "record a history, check it, and dump it to PATH");
  app.add_flag("--transfer", transfer, "run the two-table bank transfer workload instead");
  app.add_option("--accounts", tcfg.accounts)->capture_default_str();
  app.add_option("--transfers", tcfg.transfers)->capture_default_str();
  app.add_option("--forced-abort-rate", tcfg.forcedAbortRate)->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  if (transfer) {
    tcfg.threads = cfg.threads;
    tcfg.seed = cfg.seed;
    tcfg.pin = cfg.pin;
    try {
      return runTransfer(tcfg);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 2;
    }
  }

  const auto kind = ds::parseStructureKind(structure);
  if (!kind) {
    std::fprintf(stderr, "error: unknown structure '%s'\n", structure.c_str());
    return 2;
  }
  cfg.structure = *kind;
  const auto r = parseRatio(ratio);
  if (!r) {
    std::fprintf(stderr, "error: ratio must look like G:I:R\n");
    return 2;
  }
  cfg.ratio = *r;
  {
    const auto colon = txsize.find(':');
    try {
      cfg.txSizeMin = static_cast<unsigned>(std::stoul(txsize.substr(0, colon)));
      cfg.txSizeMax = colon == std::string::npos ? cfg.txSizeMin
                                                 : static_cast<unsigned>(std::stoul(txsize.substr(colon + 1)));
    } catch (const std::exception&) {
      std::fprintf(stderr, "error: txsize must look like MIN:MAX\n");
      return 2;
    }
  }
  if (modes.size() == 1 && modes[0] == "all") modes = {"original", "txOff", "txOn"};
  cfg.record = !history.empty();

  std::vector<CsvRow> rows;
  std::map<Mode, double> latency;
  bool failed = false;
  for (const auto& name : modes) {
    const auto m = parseMode(name);
    if (!m) {
      std::fprintf(stderr, "error: unknown mode '%s'\n", name.c_str());
      return 2;
    }
    cfg.mode = *m;
    if (auto bad = cfg.validate()) {
      std::fprintf(stderr, "error: %s\n", bad->c_str());
      return 2;
    }
    std::vector<CsvRow> trialRows;
    for (unsigned t = 0; t < trials; ++t) {
      WorkloadConfig c = cfg;
      c.seed = cfg.seed + t;
      const RunStats st = runBench(c);
      trialRows.push_back(toCsvRow(c, st));
      std::printf("%s %s threads=%u ratio=%s committed=%llu aborted=%llu %.1f tx/s %.1f ns/op\n",
                  std::string(ds::toString(c.structure)).c_str(), name.c_str(), c.threads, c.ratio.str().c_str(),
                  static_cast<unsigned long long>(st.committed), static_cast<unsigned long long>(st.aborted),
                  st.committedPerSecond, st.meanLatencyNs);
      if (st.committed + st.aborted != st.attempted) {
        std::fprintf(stderr, "invariant: committed + aborted != attempted\n");
        failed = true;
      }
      if (st.auditError) {
        std::fprintf(stderr, "audit: %s\n", st.auditError->c_str());
        failed = true;
      }
      if (c.record) {
        const auto v = verify::checkStrictSerializability(st.history);
        std::printf("history: %zu events, %zu committed transactions, %s\n", st.history.size(), v.transactions,
                    v.ok ? "strictly serializable" : "VIOLATION");
        if (!v.ok) {
          std::fprintf(stderr, "checker: %s\n", v.message.c_str());
          failed = true;
        }
        std::ofstream out(modes.size() * trials > 1 ? history + "." + name + "." + std::to_string(t) : history);
        verify::writeHistory(out, st.history);
        if (!out) {
          std::fprintf(stderr, "error: cannot write %s\n", history.c_str());
          failed = true;
        }
      }
    }
    CsvRow mean = trials > 1 ? meanRow(trialRows) : trialRows.front();
    latency[*m] = mean.meanLatencyNs;
    rows.insert(rows.end(), trialRows.begin(), trialRows.end());
    if (trials > 1) rows.push_back(mean);
  }

  if (latency.count(Mode::Original) && latency[Mode::Original] > 0) {
    for (Mode m : {Mode::TxOff, Mode::TxOn})
      if (latency.count(m))
        std::printf("latency ratio %s/original = %.2f\n", std::string(toString(m)).c_str(),
                    latency[m] / latency[Mode::Original]);
  }

  if (!csv.empty()) {
    try {
      emitCsv(rows, csv, append);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 1;
    }
  }
  return failed ? 1 : 0;
}
