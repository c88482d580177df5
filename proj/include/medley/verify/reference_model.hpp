#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "medley/verify/history.hpp"

namespace medley::verify {

/// Sequential models of the three structures, keyed by structure id.
/// Map operations and queue operations on one id must not be mixed.
class ReferenceModel {
 public:
  /// Applies `op` and returns the result a sequential structure would give.
  /// Insert yields 1 when it inserted and 0 otherwise. Throws
  /// std::invalid_argument on wrong arity or mixed use of an id.
  std::optional<std::uint64_t> apply(std::uint32_t structId, OpName op,
                                     const std::vector<std::uint64_t>& args);

  const std::map<std::uint64_t, std::uint64_t>& mapOf(std::uint32_t structId) const;
  const std::deque<std::uint64_t>& queueOf(std::uint32_t structId) const;

 private:
  std::unordered_map<std::uint32_t, std::map<std::uint64_t, std::uint64_t>> maps_;
  std::unordered_map<std::uint32_t, std::deque<std::uint64_t>> queues_;
};

}  // namespace medley::verify
