#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "medley/verify/history.hpp"
#include "medley/verify/reference_model.hpp"

namespace medley::verify {

struct Verdict {
  bool ok = true;
  std::string message;                // first counterexample, empty on pass
  std::optional<std::size_t> event;   // index into the checked history
  std::size_t transactions = 0;       // committed transactions replayed
  std::size_t events = 0;             // committed events replayed

  explicit operator bool() const noexcept { return ok; }
};

struct CheckOptions {
  /// Tolerated clock disagreement for the real-time check. One process,
  /// one monotonic clock: zero.
  std::int64_t slackNs = 0;
};

/// Replays committed transactions in commit-key order against the reference
/// model and checks that the order respects real-time precedence.
Verdict checkStrictSerializability(const History& h, CheckOptions opts = {});

/// Model state after applying the committed transactions in commit order.
/// Meaningful only for a history that passed the check.
ReferenceModel replayCommitted(const History& h);

}  // namespace medley::verify
