#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "medley/ds/kind.hpp"
#include "medley/tx_manager.hpp"

namespace medley::ds {

/// Type-erased handle on one structure, for test harnesses and bindings.
/// Benchmarks use the templates directly.
class AnyStructure {
 public:
  virtual ~AnyStructure() = default;
  virtual StructureKind kind() const noexcept = 0;
  virtual bool original() const noexcept = 0;
  virtual TxManager& manager() const noexcept = 0;

  /// Runs one operation (inside the caller's transaction, if any).
  /// Maps: get(k), put(k,v) on the hash table, insert(k,v) on the skiplist
  /// (result 1 or 0), remove(k). Queue: enqueue(v), dequeue().
  /// Throws std::invalid_argument for an operation the structure lacks.
  virtual std::optional<std::uint64_t> apply(OpName op, std::uint64_t a = 0, std::uint64_t b = 0) = 0;

  /// Quiescent contents: sorted key,value pairs flattened for maps; queue
  /// values front to back.
  virtual std::vector<std::uint64_t> contents() const = 0;
  virtual std::optional<std::string> audit() const = 0;
  virtual std::size_t reachableNodes() const = 0;

  bool supports(OpName op) const noexcept;
};

/// `original` selects the untransformed baseline (no MCNS metadata).
std::unique_ptr<AnyStructure> makeStructure(StructureKind kind, TxManager& mgr, bool original = false,
                                            std::size_t buckets = 1 << 16);

}  // namespace medley::ds
