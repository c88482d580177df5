#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "medley/ds/kind.hpp"
#include "medley/tx_manager.hpp"

namespace medley::verify {

using ds::OpName;
using ds::parseOpName;
using ds::toString;

/// Serialization key of a committed transaction. `stamp` comes from the
/// global commit clock; ties (never expected) break on (tid, serial).
struct CommitKey {
  std::uint32_t tid = 0;
  std::uint64_t serial = 0;
  std::uint64_t stamp = 0;

  friend bool operator==(const CommitKey&, const CommitKey&) = default;
  friend bool operator<(const CommitKey& a, const CommitKey& b) noexcept {
    if (a.stamp != b.stamp) return a.stamp < b.stamp;
    if (a.tid != b.tid) return a.tid < b.tid;
    return a.serial < b.serial;
  }
};

/// One recorded operation. For transactional events the timestamps bracket
/// the operation's invocation and the enclosing transaction's completion.
struct HistoryEvent {
  std::uint32_t tid = 0;
  std::uint64_t serial = 0;
  std::uint32_t structId = 0;
  OpName op = OpName::Get;
  std::vector<std::uint64_t> args;
  std::optional<std::uint64_t> result;
  std::int64_t invocationNs = 0;
  std::int64_t responseNs = 0;
  std::optional<CommitKey> commit;  // nullopt: aborted

  friend bool operator==(const HistoryEvent&, const HistoryEvent&) = default;
};

using History = std::vector<HistoryEvent>;

/// Tab-separated line: tid, serial, struct, op, args (comma list), result
/// ("none" or a number), invocation, response, commit ("tid:serial:stamp"
/// or "aborted").
std::string formatEvent(const HistoryEvent& e);
std::optional<HistoryEvent> parseEvent(std::string_view line, std::string* error = nullptr);

void writeHistory(std::ostream& out, const History& h);
/// Throws std::runtime_error naming the first malformed line.
History readHistory(std::istream& in);

/// Per-thread, contention-free event logs for one TxManager. Enables commit
/// stamping on the manager for its lifetime.
class HistoryRecorder {
 public:
  explicit HistoryRecorder(TxManager& mgr);
  ~HistoryRecorder();
  HistoryRecorder(const HistoryRecorder&) = delete;
  HistoryRecorder& operator=(const HistoryRecorder&) = delete;

  /// Nanoseconds on the monotonic clock since the recorder was created.
  std::int64_t now() const noexcept;

  /// Transaction bracket, called by the owning thread: beginTx right after
  /// txBegin, then one `op` per operation, then commitTx after txEnd
  /// returned or abortTx after the abort signal.
  void beginTx();
  void op(std::uint32_t structId, OpName op, std::vector<std::uint64_t> args,
          std::optional<std::uint64_t> result, std::int64_t invocationNs);
  void commitTx();
  void abortTx();

  /// Initial contents, ordered before everything else (stamp 0).
  void recordSetup(std::uint32_t structId, OpName op, std::vector<std::uint64_t> args,
                   std::optional<std::uint64_t> result);
  /// A standalone operation as a singleton transaction stamped at its
  /// response. Only sound when no transaction runs concurrently with it.
  void recordStandalone(std::uint32_t structId, OpName op, std::vector<std::uint64_t> args,
                        std::optional<std::uint64_t> result, std::int64_t invocationNs);

  /// Merge of all per-thread logs; call at quiescence.
  History merged() const;
  std::size_t size() const;

 private:
  struct Log {
    std::vector<HistoryEvent> events;
    std::size_t txStart = 0;
    std::uint64_t serial = 0;
    std::uint32_t tid = 0;
  };
  Log& local();

  TxManager& mgr_;
  const bool stampingBefore_;
  const std::chrono::steady_clock::time_point origin_;
  std::unique_ptr<std::atomic<Log*>[]> logs_;
  std::atomic<std::uint64_t> standaloneSerial_{0};
};

}  // namespace medley::verify
