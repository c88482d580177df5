#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace medley::ds {

enum class StructureKind { HashTable, SkipList, Queue };

inline constexpr StructureKind kAllStructures[] = {StructureKind::HashTable, StructureKind::SkipList,
                                                   StructureKind::Queue};

constexpr std::string_view toString(StructureKind k) noexcept {
  switch (k) {
    case StructureKind::HashTable: return "hashtable";
    case StructureKind::SkipList: return "skiplist";
    case StructureKind::Queue: return "queue";
  }
  return "?";
}

constexpr std::optional<StructureKind> parseStructureKind(std::string_view s) noexcept {
  for (auto k : kAllStructures)
    if (toString(k) == s) return k;
  return std::nullopt;
}

/// Operation names shared by histories, workloads and the Python module.
/// Insert is the skiplist's insert-if-absent; Put inserts or replaces.
enum class OpName : std::uint8_t { Get, Put, Remove, Insert, Enqueue, Dequeue };

inline constexpr std::string_view kOpNames[] = {"get", "put", "remove", "insert", "enqueue", "dequeue"};

constexpr std::string_view toString(OpName op) noexcept { return kOpNames[static_cast<int>(op)]; }

constexpr std::optional<OpName> parseOpName(std::string_view s) noexcept {
  for (int i = 0; i < 6; ++i)
    if (kOpNames[i] == s) return static_cast<OpName>(i);
  return std::nullopt;
}

}  // namespace medley::ds
