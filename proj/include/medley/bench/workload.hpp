#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "medley/ds/kind.hpp"
#include "medley/verify/history.hpp"

namespace medley::bench {

using ds::StructureKind;

/// original: untransformed structures. txOff: transformed structures used
/// without transactions. txOn: every group of operations is a transaction.
enum class Mode { Original, TxOff, TxOn };

std::string_view toString(Mode m) noexcept;
std::optional<Mode> parseMode(std::string_view s) noexcept;

/// get:insert:remove weights. For the queue, insert is enqueue and remove
/// is dequeue; get must be 0.
struct Ratio {
  std::uint32_t get = 0, insert = 1, remove = 1;
  std::string str() const;
};
std::optional<Ratio> parseRatio(std::string_view s);

struct WorkloadConfig {
  StructureKind structure = StructureKind::HashTable;
  Mode mode = Mode::TxOn;
  unsigned threads = 1;
  double seconds = 5.0;             // time cap; 0 = none (needs transactions)
  std::uint64_t transactions = 0;   // committed-transaction target; 0 = none
  Ratio ratio;
  unsigned txSizeMin = 1, txSizeMax = 10;
  std::uint64_t keySpace = 100000;
  std::uint64_t prefill = 50000;
  std::uint64_t seed = 1;
  bool pin = false;
  std::size_t buckets = std::size_t{1} << 20;
  bool record = false;              // keep a history for the serializability check

  /// Human-readable reason the configuration is unusable, if any.
  std::optional<std::string> validate() const;
};

struct RunStats {
  double elapsedSeconds = 0;
  std::uint64_t committed = 0;   // transactions (operation groups) completed
  std::uint64_t aborted = 0;     // aborted attempts, each retried
  std::uint64_t attempted = 0;   // committed + aborted
  std::uint64_t operations = 0;  // operations in committed transactions
  double committedPerSecond = 0;
  double meanLatencyNs = 0;      // thread-time per committed operation
  std::vector<std::uint64_t> finalContents;  // flattened, see AnyStructure
  verify::History history;       // when recording
  std::optional<std::string> auditError;  // structural audit at quiescence
};

/// Prefills single-threaded, then runs the timed phase on `threads` workers.
/// Throws std::invalid_argument for an invalid configuration.
RunStats runBench(const WorkloadConfig& cfg);

struct TransferConfig {
  unsigned threads = 8;
  std::uint64_t accounts = 1024;
  std::uint64_t initialBalance = 1000;
  std::uint64_t transfers = 100000;  // committed transfers to reach
  double seconds = 0;                // optional time cap
  std::uint64_t maxAmount = 200;
  double forcedAbortRate = 0;        // chance to take the failed-validation path
  std::uint64_t seed = 1;
  bool pin = false;
  /// Explicit transfers (from, to, amount) run in order on one thread
  /// instead of random ones.
  std::vector<std::array<std::uint64_t, 3>> script;
};

struct TransferStats {
  RunStats run;
  std::uint64_t initialTotal = 0;
  std::uint64_t finalTotal = 0;
  std::uint64_t negativeBalances = 0;
  std::uint64_t missingAccounts = 0;
  std::uint64_t insufficientFunds = 0;  // business aborts, not retried
  std::uint64_t forcedAborts = 0;
  std::vector<std::uint64_t> balances;  // indexed by account

  bool conserved() const noexcept {
    return finalTotal == initialTotal && negativeBalances == 0 && missingAccounts == 0;
  }
};

/// Random transfers between accounts split over two hash tables.
TransferStats runTransferBench(const TransferConfig& cfg);

struct CsvRow {
  std::string structure, mode;
  unsigned threads = 0;
  std::string ratio, txsize;
  double duration = 0;
  double committedPerSecond = 0;
  std::uint64_t aborts = 0;
  double meanLatencyNs = 0;
};

CsvRow toCsvRow(const WorkloadConfig& cfg, const RunStats& s);
/// Mean over trials of one configuration; mode is suffixed "/mean".
CsvRow meanRow(const std::vector<CsvRow>& trials);

inline constexpr std::string_view kCsvHeader =
    "structure,mode,threads,ratio,txsize,duration,committed_tx_per_s,aborts,mean_latency_ns";

/// Writes the header (unless appending to a non-empty file) and the rows.
/// Throws std::runtime_error on I/O failure.
void emitCsv(const std::vector<CsvRow>& rows, const std::string& path, bool append = false);

}  // namespace medley::bench
