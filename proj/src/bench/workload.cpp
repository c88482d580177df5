#include "medley/bench/workload.hpp"

#include <pthread.h>
#include <sched.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "medley/ds/hash_table.hpp"
#include "medley/ds/ms_queue.hpp"
#include "medley/ds/skip_list.hpp"

namespace medley::bench {

using verify::HistoryRecorder;
using verify::OpName;
using Clock = std::chrono::steady_clock;

std::string_view toString(Mode m) noexcept {
  switch (m) {
    case Mode::Original: return "original";
    case Mode::TxOff: return "txOff";
    case Mode::TxOn: return "txOn";
  }
  return "?";
}

std::optional<Mode> parseMode(std::string_view s) noexcept {
  for (Mode m : {Mode::Original, Mode::TxOff, Mode::TxOn})
    if (toString(m) == s) return m;
  return std::nullopt;
}

std::string Ratio::str() const {
  return std::to_string(get) + ":" + std::to_string(insert) + ":" + std::to_string(remove);
}

std::optional<Ratio> parseRatio(std::string_view s) {
  std::uint32_t v[3];
  for (int i = 0; i < 3; ++i) {
    const auto pos = i < 2 ? s.find(':') : s.size();
    if (pos == std::string_view::npos) return std::nullopt;
    const auto part = s.substr(0, pos);
    const auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), v[i]);
    if (ec != std::errc{} || p != part.data() + part.size() || part.empty()) return std::nullopt;
    s = i < 2 ? s.substr(pos + 1) : std::string_view{};
  }
  return Ratio{v[0], v[1], v[2]};
}

std::optional<std::string> WorkloadConfig::validate() const {
  if (threads == 0) return "threads must be at least 1";
  if (seconds < 0) return "seconds must be nonnegative";
  if (seconds == 0 && transactions == 0) return "need a time cap or a transaction target";
  if (ratio.get + ratio.insert + ratio.remove == 0) return "ratio weights are all zero";
  if (structure == StructureKind::Queue && ratio.get != 0)
    return "the queue has no get: use a ratio of the form 0:I:R";
  if (txSizeMin == 0 || txSizeMin > txSizeMax) return "txsize must satisfy 1 <= min <= max";
  if (keySpace == 0) return "keyspace must be positive";
  if (structure != StructureKind::Queue && prefill > keySpace) return "prefill exceeds keyspace";
  if (record && mode != Mode::TxOn && threads > 1)
    return "history recording of standalone operations needs a single thread";
  return std::nullopt;
}

namespace {

void pinTo(unsigned index) {
  const unsigned n = std::max(1u, std::thread::hardware_concurrency());
  cpu_set_t set;
  CPU_ZERO(&set);
  CPU_SET(index % n, &set);
  pthread_setaffinity_np(pthread_self(), sizeof(set), &set);
}

/// Spin-yield for a random slice of the current backoff window, then widen it.
void backoff(std::mt19937_64& rng, std::uint64_t& windowNs) {
  constexpr std::uint64_t kCapNs = 64'000;
  const auto until = Clock::now() + std::chrono::nanoseconds(rng() % windowNs + 1);
  while (Clock::now() < until) std::this_thread::yield();
  windowNs = std::min(windowNs * 2, kCapNs);
}

enum class Kind { Get, Insert, Remove };

struct Planned {
  Kind kind;
  std::uint64_t key;
  std::uint64_t val;
};

// Uniform operations over each structure.
template <class S>
struct Ops;

template <class P>
struct Ops<ds::HashTable<P>> {
  using S = ds::HashTable<P>;
  static constexpr OpName kInsert = OpName::Put;
  static std::optional<std::uint64_t> run(S& s, const Planned& p) {
    switch (p.kind) {
      case Kind::Get: return s.get(p.key);
      case Kind::Insert: return s.put(p.key, p.val);
      default: return s.remove(p.key);
    }
  }
  static std::vector<std::uint64_t> contents(const S& s) {
    std::vector<std::uint64_t> out;
    for (auto [k, v] : s.snapshot()) out.insert(out.end(), {k, v});
    return out;
  }
};

template <class P>
struct Ops<ds::SkipList<P>> {
  using S = ds::SkipList<P>;
  static constexpr OpName kInsert = OpName::Insert;
  static std::optional<std::uint64_t> run(S& s, const Planned& p) {
    switch (p.kind) {
      case Kind::Get: return s.get(p.key);
      case Kind::Insert: return s.insert(p.key, p.val) ? 1 : 0;
      default: return s.remove(p.key);
    }
  }
  static std::vector<std::uint64_t> contents(const S& s) {
    std::vector<std::uint64_t> out;
    for (auto [k, v] : s.snapshot()) out.insert(out.end(), {k, v});
    return out;
  }
};

template <class P>
struct Ops<ds::MsQueue<P>> {
  using S = ds::MsQueue<P>;
  static constexpr OpName kInsert = OpName::Enqueue;
  static std::optional<std::uint64_t> run(S& s, const Planned& p) {
    if (p.kind == Kind::Insert) {
      s.enqueue(p.val);
      return std::nullopt;
    }
    return s.dequeue();
  }
  static std::vector<std::uint64_t> contents(const S& s) { return s.snapshot(); }
};

template <class S>
constexpr bool kIsQueue = Ops<S>::kInsert == OpName::Enqueue;

template <class S>
OpName nameOf(Kind k) {
  switch (k) {
    case Kind::Get: return OpName::Get;
    case Kind::Insert: return Ops<S>::kInsert;
    default: return kIsQueue<S> ? OpName::Dequeue : OpName::Remove;
  }
}

template <class S>
std::vector<std::uint64_t> argsOf(const Planned& p) {
  if constexpr (kIsQueue<S>) {
    if (p.kind == Kind::Insert) return {p.val};
    return {};
  } else {
    if (p.kind == Kind::Insert) return {p.key, p.val};
    return {p.key};
  }
}

struct WorkerStats {
  std::uint64_t committed = 0, aborted = 0, ops = 0;
  std::int64_t busyNs = 0;
};

template <class S>
RunStats runWith(const WorkloadConfig& cfg, TxManager& mgr, S& s) {
  std::unique_ptr<HistoryRecorder> rec;
  if (cfg.record) rec = std::make_unique<HistoryRecorder>(mgr);

  // Prefill with distinct keys (partial Fisher-Yates), single-threaded.
  std::mt19937_64 prng(cfg.seed);
  if constexpr (kIsQueue<S>) {
    for (std::uint64_t i = 0; i < cfg.prefill; ++i) {
      const Planned p{Kind::Insert, 0, prng() % cfg.keySpace};
      Ops<S>::run(s, p);
      if (rec) rec->recordSetup(0, OpName::Enqueue, {p.val}, std::nullopt);
    }
  } else {
    std::vector<std::uint64_t> keys(cfg.keySpace);
    std::iota(keys.begin(), keys.end(), 0);
    for (std::uint64_t i = 0; i < cfg.prefill; ++i) {
      std::swap(keys[i], keys[i + prng() % (cfg.keySpace - i)]);
      const Planned p{Kind::Insert, keys[i], prng()};
      const auto r = Ops<S>::run(s, p);
      if (rec) rec->recordSetup(0, Ops<S>::kInsert, {p.key, p.val}, r);
    }
  }
  mgr.epochCollect();

  const std::uint32_t weightTotal = cfg.ratio.get + cfg.ratio.insert + cfg.ratio.remove;
  std::atomic<bool> go{false}, stop{false};
  std::atomic<unsigned> ready{0};
  std::atomic<std::uint64_t> committedTotal{0};
  std::vector<WorkerStats> stats(cfg.threads);

  auto worker = [&](unsigned t) {
    if (cfg.pin) pinTo(t);
    std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ULL + t + 1);
    std::vector<Planned> plan;
    WorkerStats& st = stats[t];
    ready.fetch_add(1);
    while (!go.load(std::memory_order_acquire)) std::this_thread::yield();
    const auto t0 = Clock::now();
    while (!stop.load(std::memory_order_relaxed)) {
      plan.clear();
      const unsigned size = cfg.txSizeMin + static_cast<unsigned>(rng() % (cfg.txSizeMax - cfg.txSizeMin + 1));
      for (unsigned i = 0; i < size; ++i) {
        const std::uint32_t w = static_cast<std::uint32_t>(rng() % weightTotal);
        const Kind k = w < cfg.ratio.get                      ? Kind::Get
                       : w < cfg.ratio.get + cfg.ratio.insert ? Kind::Insert
                                                              : Kind::Remove;
        plan.push_back({k, rng() % cfg.keySpace, rng() % cfg.keySpace});
      }

      if (cfg.mode == Mode::TxOn) {
        std::uint64_t window = 1000;
        for (;;) {
          try {
            mgr.txBegin();
            if (rec) rec->beginTx();
            for (const auto& p : plan) {
              const auto inv = rec ? rec->now() : 0;
              const auto r = Ops<S>::run(s, p);
              if (rec) rec->op(0, nameOf<S>(p.kind), argsOf<S>(p), r, inv);
            }
            mgr.txEnd();
            if (rec) rec->commitTx();
            break;
          } catch (const TransactionAborted&) {
            if (rec) rec->abortTx();
            ++st.aborted;
            backoff(rng, window);
          }
        }
      } else {
        for (const auto& p : plan) {
          const auto inv = rec ? rec->now() : 0;
          const auto r = Ops<S>::run(s, p);
          if (rec) rec->recordStandalone(0, nameOf<S>(p.kind), argsOf<S>(p), r, inv);
        }
      }
      ++st.committed;
      st.ops += plan.size();
      const auto c = committedTotal.fetch_add(1, std::memory_order_relaxed) + 1;
      if (cfg.transactions != 0 && c >= cfg.transactions) stop.store(true, std::memory_order_relaxed);
    }
    st.busyNs = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count();
  };

  std::vector<std::thread> threads;
  for (unsigned t = 0; t < cfg.threads; ++t) threads.emplace_back(worker, t);
  while (ready.load() < cfg.threads) std::this_thread::yield();
  const auto start = Clock::now();
  go.store(true, std::memory_order_release);
  if (cfg.seconds > 0) {
    const auto deadline = start + std::chrono::duration<double>(cfg.seconds);
    while (!stop.load() && Clock::now() < deadline)
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    stop.store(true);
  }
  for (auto& th : threads) th.join();
  const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();

  RunStats out;
  out.elapsedSeconds = elapsed;
  std::int64_t busy = 0;
  for (const auto& st : stats) {
    out.committed += st.committed;
    out.aborted += st.aborted;
    out.operations += st.ops;
    busy += st.busyNs;
  }
  out.attempted = out.committed + out.aborted;
  out.committedPerSecond = elapsed > 0 ? out.committed / elapsed : 0;
  out.meanLatencyNs = out.operations > 0 ? static_cast<double>(busy) / out.operations : 0;
  mgr.epochCollect();
  out.finalContents = Ops<S>::contents(s);
  out.auditError = s.audit();
  if (rec) out.history = rec->merged();
  return out;
}

template <class Policy>
RunStats dispatch(const WorkloadConfig& cfg, TxManager& mgr) {
  switch (cfg.structure) {
    case StructureKind::HashTable: {
      ds::HashTable<Policy> s(mgr, cfg.buckets);
      return runWith(cfg, mgr, s);
    }
    case StructureKind::SkipList: {
      ds::SkipList<Policy> s(mgr);
      return runWith(cfg, mgr, s);
    }
    case StructureKind::Queue: {
      ds::MsQueue<Policy> s(mgr);
      return runWith(cfg, mgr, s);
    }
  }
  throw std::invalid_argument("unknown structure");
}

}  // namespace

RunStats runBench(const WorkloadConfig& cfg) {
  if (auto bad = cfg.validate()) throw std::invalid_argument(*bad);
  TxManager mgr;
  return cfg.mode == Mode::Original ? dispatch<PlainPolicy>(cfg, mgr) : dispatch<MedleyPolicy>(cfg, mgr);
}

TransferStats runTransferBench(const TransferConfig& cfg) {
  if (cfg.threads == 0 || cfg.accounts < 2 || cfg.maxAmount == 0)
    throw std::invalid_argument("transfer bench needs threads >= 1, accounts >= 2, maxAmount >= 1");
  if (cfg.script.empty() && cfg.transfers == 0 && cfg.seconds <= 0)
    throw std::invalid_argument("transfer bench needs a transfer target or a time cap");

  TxManager mgr;
  ds::HashTable<> tables[2] = {ds::HashTable<>(mgr, 4096), ds::HashTable<>(mgr, 4096)};
  auto tableOf = [&](std::uint64_t a) -> ds::HashTable<>& { return tables[a % 2]; };

  TransferStats out;
  for (std::uint64_t a = 0; a < cfg.accounts; ++a) {
    tableOf(a).put(a, cfg.initialBalance);
    out.initialTotal += cfg.initialBalance;
  }

  std::atomic<bool> go{false}, stop{false};
  std::atomic<unsigned> ready{0};
  std::atomic<std::uint64_t> committedTotal{0};
  struct PerThread {
    WorkerStats w;
    std::uint64_t insufficient = 0, forced = 0;
  };
  const unsigned nThreads = cfg.script.empty() ? cfg.threads : 1;
  std::vector<PerThread> per(nThreads);

  // One transfer; returns false for a business abort (not retried).
  auto transfer = [&](PerThread& me, std::mt19937_64& rng, std::uint64_t from, std::uint64_t to,
                      std::uint64_t amount) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uint64_t window = 1000;
    for (;;) {
      bool business = false;
      try {
        mgr.txBegin();
        const auto v1 = tableOf(from).get(from);
        if (!v1 || *v1 < amount) {
          business = true;
          mgr.txAbort();
        }
        const auto v2 = tableOf(to).get(to);
        if (!v2) {
          business = true;
          mgr.txAbort();
        }
        tableOf(from).put(from, *v1 - amount);
        tableOf(to).put(to, *v2 + amount);
        const bool inject = cfg.forcedAbortRate > 0 && coin(rng) < cfg.forcedAbortRate;
        if (inject) ++me.forced;
        if (inject || !mgr.validateReads()) mgr.txAbort();
        mgr.txEnd();
        return true;
      } catch (const TransactionAborted&) {
        if (business) {
          ++me.insufficient;
          return false;
        }
        ++me.w.aborted;
        backoff(rng, window);
      }
    }
  };

  auto worker = [&](unsigned t) {
    if (cfg.pin) pinTo(t);
    std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ULL + t + 1);
    PerThread& me = per[t];
    ready.fetch_add(1);
    while (!go.load(std::memory_order_acquire)) std::this_thread::yield();
    const auto t0 = Clock::now();
    if (!cfg.script.empty()) {
      for (const auto& [from, to, amount] : cfg.script) {
        if (transfer(me, rng, from, to, amount)) ++me.w.committed;
        me.w.ops += 4;
      }
    } else {
      while (!stop.load(std::memory_order_relaxed)) {
        const std::uint64_t from = rng() % cfg.accounts;
        std::uint64_t to = rng() % (cfg.accounts - 1);
        if (to >= from) ++to;
        const std::uint64_t amount = 1 + rng() % cfg.maxAmount;
        if (!transfer(me, rng, from, to, amount)) continue;
        ++me.w.committed;
        me.w.ops += 4;
        const auto c = committedTotal.fetch_add(1, std::memory_order_relaxed) + 1;
        if (cfg.transfers != 0 && c >= cfg.transfers) stop.store(true, std::memory_order_relaxed);
      }
    }
    me.w.busyNs = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count();
  };

  std::vector<std::thread> threads;
  for (unsigned t = 0; t < nThreads; ++t) threads.emplace_back(worker, t);
  while (ready.load() < nThreads) std::this_thread::yield();
  const auto start = Clock::now();
  go.store(true, std::memory_order_release);
  if (cfg.seconds > 0 && cfg.script.empty()) {
    const auto deadline = start + std::chrono::duration<double>(cfg.seconds);
    while (!stop.load() && Clock::now() < deadline) std::this_thread::sleep_for(std::chrono::milliseconds(2));
    stop.store(true);
  }
  for (auto& th : threads) th.join();

  RunStats& run = out.run;
  run.elapsedSeconds = std::chrono::duration<double>(Clock::now() - start).count();
  std::int64_t busy = 0;
  for (const auto& p : per) {
    run.committed += p.w.committed;
    run.aborted += p.w.aborted;
    run.operations += p.w.ops;
    busy += p.w.busyNs;
    out.insufficientFunds += p.insufficient;
    out.forcedAborts += p.forced;
  }
  run.attempted = run.committed + run.aborted;
  run.committedPerSecond = run.elapsedSeconds > 0 ? run.committed / run.elapsedSeconds : 0;
  run.meanLatencyNs = run.operations > 0 ? static_cast<double>(busy) / run.operations : 0;

  out.balances.resize(cfg.accounts);
  for (std::uint64_t a = 0; a < cfg.accounts; ++a) {
    const auto v = tableOf(a).get(a);
    if (!v) {
      ++out.missingAccounts;
      continue;
    }
    if (*v > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) ++out.negativeBalances;
    out.balances[a] = *v;
    out.finalTotal += *v;
  }
  return out;
}

CsvRow toCsvRow(const WorkloadConfig& cfg, const RunStats& s) {
  CsvRow r;
  r.structure = std::string(ds::toString(cfg.structure));
  r.mode = std::string(toString(cfg.mode));
  r.threads = cfg.threads;
  r.ratio = cfg.ratio.str();
  r.txsize = std::to_string(cfg.txSizeMin) + ":" + std::to_string(cfg.txSizeMax);
  r.duration = s.elapsedSeconds;
  r.committedPerSecond = s.committedPerSecond;
  r.aborts = s.aborted;
  r.meanLatencyNs = s.meanLatencyNs;
  return r;
}

CsvRow meanRow(const std::vector<CsvRow>& trials) {
  if (trials.empty()) throw std::invalid_argument("meanRow needs at least one trial");
  CsvRow m = trials.front();
  m.mode += "/mean";
  double dur = 0, tput = 0, aborts = 0, lat = 0;
  for (const auto& t : trials) {
    dur += t.duration;
    tput += t.committedPerSecond;
    aborts += static_cast<double>(t.aborts);
    lat += t.meanLatencyNs;
  }
  const double n = static_cast<double>(trials.size());
  m.duration = dur / n;
  m.committedPerSecond = tput / n;
  m.aborts = static_cast<std::uint64_t>(std::llround(aborts / n));
  m.meanLatencyNs = lat / n;
  return m;
}

void emitCsv(const std::vector<CsvRow>& rows, const std::string& path, bool append) {
  bool needHeader = true;
  if (append) {
    std::ifstream probe(path, std::ios::binary | std::ios::ate);
    needHeader = !probe || probe.tellg() <= 0;
  }
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  if (needHeader) out << kCsvHeader << '\n';
  char buf[64];
  for (const auto& r : rows) {
    out << r.structure << ',' << r.mode << ',' << r.threads << ',' << r.ratio << ',' << r.txsize << ',';
    std::snprintf(buf, sizeof buf, "%.3f", r.duration);
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.1f", r.committedPerSecond);
    out << buf << ',' << r.aborts << ',';
    std::snprintf(buf, sizeof buf, "%.1f", r.meanLatencyNs);
    out << buf << '\n';
  }
  out.flush();
  if (!out) throw std::runtime_error("write to " + path + " failed");
}

}  // namespace medley::bench
