#include "medley/verify/history.hpp"

#include <charconv>
#include <istream>
#include <mutex>
#include <ostream>
#include <stdexcept>

#include "medley/status_word.hpp"
#include "medley/thread_registry.hpp"

namespace medley::verify {

namespace {

template <class T>
bool parseNumber(std::string_view s, T& out) {
  if (s.empty()) return false;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

bool fail(std::string* error, std::string msg) {
  if (error != nullptr) *error = std::move(msg);
  return false;
}

}  // namespace

std::string formatEvent(const HistoryEvent& e) {
  std::string out;
  out += std::to_string(e.tid) + '\t' + std::to_string(e.serial) + '\t' + std::to_string(e.structId) +
         '\t' + std::string(toString(e.op)) + '\t';
  for (std::size_t i = 0; i < e.args.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(e.args[i]);
  }
  out += '\t';
  out += e.result ? std::to_string(*e.result) : std::string("none");
  out += '\t' + std::to_string(e.invocationNs) + '\t' + std::to_string(e.responseNs) + '\t';
  if (e.commit)
    out += std::to_string(e.commit->tid) + ':' + std::to_string(e.commit->serial) + ':' +
           std::to_string(e.commit->stamp);
  else
    out += "aborted";
  return out;
}

std::optional<HistoryEvent> parseEvent(std::string_view line, std::string* error) {
  const auto f = split(line, '\t');
  if (f.size() != 9) {
    fail(error, "expected 9 tab-separated fields, got " + std::to_string(f.size()));
    return std::nullopt;
  }
  HistoryEvent e;
  if (!parseNumber(f[0], e.tid) || !parseNumber(f[1], e.serial) || !parseNumber(f[2], e.structId)) {
    fail(error, "bad tid/serial/struct field");
    return std::nullopt;
  }
  const auto op = parseOpName(f[3]);
  if (!op) {
    fail(error, "unknown operation '" + std::string(f[3]) + "'");
    return std::nullopt;
  }
  e.op = *op;
  if (!f[4].empty()) {
    for (auto a : split(f[4], ',')) {
      std::uint64_t v = 0;
      if (!parseNumber(a, v)) {
        fail(error, "bad argument '" + std::string(a) + "'");
        return std::nullopt;
      }
      e.args.push_back(v);
    }
  }
  if (f[5] != "none") {
    std::uint64_t v = 0;
    if (!parseNumber(f[5], v)) {
      fail(error, "bad result field");
      return std::nullopt;
    }
    e.result = v;
  }
  if (!parseNumber(f[6], e.invocationNs) || !parseNumber(f[7], e.responseNs)) {
    fail(error, "bad timestamp field");
    return std::nullopt;
  }
  if (f[8] != "aborted") {
    const auto k = split(f[8], ':');
    CommitKey key;
    if (k.size() != 3 || !parseNumber(k[0], key.tid) || !parseNumber(k[1], key.serial) ||
        !parseNumber(k[2], key.stamp)) {
      fail(error, "bad commit key '" + std::string(f[8]) + "'");
      return std::nullopt;
    }
    e.commit = key;
  }
  return e;
}

void writeHistory(std::ostream& out, const History& h) {
  for (const auto& e : h) out << formatEvent(e) << '\n';
}

History readHistory(std::istream& in) {
  History h;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    std::string err;
    auto e = parseEvent(line, &err);
    if (!e) throw std::runtime_error("history line " + std::to_string(n) + ": " + err);
    h.push_back(std::move(*e));
  }
  return h;
}

HistoryRecorder::HistoryRecorder(TxManager& mgr)
    : mgr_(mgr), stampingBefore_(mgr.stampCommits()), origin_(std::chrono::steady_clock::now()),
      logs_(new std::atomic<Log*>[StatusWord::kMaxThreads]) {
  for (std::uint64_t i = 0; i < StatusWord::kMaxThreads; ++i) logs_[i].store(nullptr);
  mgr_.setStampCommits(true);
}

HistoryRecorder::~HistoryRecorder() {
  mgr_.setStampCommits(stampingBefore_);
  for (std::uint64_t i = 0; i < StatusWord::kMaxThreads; ++i) delete logs_[i].load();
}

std::int64_t HistoryRecorder::now() const noexcept {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() -
                                                              origin_)
      .count();
}

HistoryRecorder::Log& HistoryRecorder::local() {
  const auto tid = ThreadRegistry::currentId();
  Log* l = logs_[tid].load(std::memory_order_acquire);
  if (l == nullptr) {
    l = new Log;
    l->tid = tid;
    logs_[tid].store(l, std::memory_order_release);
  }
  return *l;
}

void HistoryRecorder::beginTx() {
  Log& l = local();
  l.txStart = l.events.size();
  l.serial = mgr_.descriptor().status().serial();
}

void HistoryRecorder::op(std::uint32_t structId, OpName op, std::vector<std::uint64_t> args,
                         std::optional<std::uint64_t> result, std::int64_t invocationNs) {
  Log& l = local();
  HistoryEvent e;
  e.tid = l.tid;
  e.serial = l.serial;
  e.structId = structId;
  e.op = op;
  e.args = std::move(args);
  e.result = result;
  e.invocationNs = invocationNs;
  e.responseNs = now();
  l.events.push_back(std::move(e));
}

void HistoryRecorder::commitTx() {
  Log& l = local();
  const std::int64_t end = now();
  const CommitKey key{l.tid, l.serial, mgr_.context().lastCommitStamp};
  for (std::size_t i = l.txStart; i < l.events.size(); ++i) {
    l.events[i].responseNs = end;
    l.events[i].commit = key;
  }
  l.txStart = l.events.size();
}

void HistoryRecorder::abortTx() {
  Log& l = local();
  const std::int64_t end = now();
  for (std::size_t i = l.txStart; i < l.events.size(); ++i) {
    l.events[i].responseNs = end;
    l.events[i].commit.reset();
  }
  l.txStart = l.events.size();
}

void HistoryRecorder::recordSetup(std::uint32_t structId, OpName op, std::vector<std::uint64_t> args,
                                  std::optional<std::uint64_t> result) {
  Log& l = local();
  HistoryEvent e;
  e.tid = l.tid;
  e.serial = 0;
  e.structId = structId;
  e.op = op;
  e.args = std::move(args);
  e.result = result;
  e.commit = CommitKey{l.tid, 0, 0};
  l.events.push_back(std::move(e));
  l.txStart = l.events.size();
}

void HistoryRecorder::recordStandalone(std::uint32_t structId, OpName op,
                                       std::vector<std::uint64_t> args,
                                       std::optional<std::uint64_t> result,
                                       std::int64_t invocationNs) {
  Log& l = local();
  HistoryEvent e;
  e.tid = l.tid;
  // Standalone pseudo-transactions get serials from a range no descriptor
  // reaches, so their keys never collide with real transactions.
  e.serial = (std::uint64_t{1} << 62) + standaloneSerial_.fetch_add(1) + 1;
  e.structId = structId;
  e.op = op;
  e.args = std::move(args);
  e.result = result;
  e.invocationNs = invocationNs;
  e.commit = CommitKey{l.tid, e.serial, mgr_.drawStamp()};
  e.responseNs = now();
  l.events.push_back(std::move(e));
  l.txStart = l.events.size();
}

History HistoryRecorder::merged() const {
  History out;
  for (std::uint64_t i = 0; i < StatusWord::kMaxThreads; ++i) {
    const Log* l = logs_[i].load(std::memory_order_acquire);
    if (l != nullptr) out.insert(out.end(), l->events.begin(), l->events.end());
  }
  return out;
}

std::size_t HistoryRecorder::size() const {
  std::size_t n = 0;
  for (std::uint64_t i = 0; i < StatusWord::kMaxThreads; ++i) {
    const Log* l = logs_[i].load(std::memory_order_acquire);
    if (l != nullptr) n += l->events.size();
  }
  return n;
}

}  // namespace medley::verify
