#pragma once

#include <cstdint>

#include "medley/cas_cell.hpp"
#include "medley/plain.hpp"

namespace medley::ds {

// Node references live in cell payloads with bit 0 as the deletion mark.
inline constexpr std::uint64_t kMark = 1;

inline constexpr bool isMarked(std::uint64_t w) noexcept { return (w & kMark) != 0; }
inline constexpr std::uint64_t unmarked(std::uint64_t w) noexcept { return w & ~kMark; }
inline constexpr std::uint64_t withMark(std::uint64_t w) noexcept { return w | kMark; }

template <class Node>
Node* nodeOf(std::uint64_t w) noexcept {
  return reinterpret_cast<Node*>(unmarked(w));
}
template <class Node>
std::uint64_t wordOf(const Node* n) noexcept {
  return reinterpret_cast<std::uint64_t>(n);
}

/// Raw, side-effect-free view of a cell: nullopt-like `holdsDescriptor`
/// when a transaction is mid-flight on it. Never helps, never records.
struct Peek {
  std::uint64_t value;
  bool descriptor;
};
inline Peek peek(const CasCell& c) noexcept {
  const Pair p = c.loadPair();
  return {p.value, CasCell::holdsDescriptor(p)};
}
inline Peek peek(const PlainCell& c) noexcept { return {c.load(), false}; }

/// Quiescent-state parity check: an even counter and no descriptor.
inline bool quiescentParityOk(const CasCell& c) noexcept {
  const Pair p = c.loadPair();
  return (p.counter & 1) == 0;
}
inline bool quiescentParityOk(const PlainCell&) noexcept { return true; }

/// 64-bit finaliser (splitmix64) used for bucket selection.
inline constexpr std::uint64_t mixKey(std::uint64_t k) noexcept {
  k ^= k >> 30;
  k *= 0xbf58476d1ce4e5b9ULL;
  k ^= k >> 27;
  k *= 0x94d049bb133111ebULL;
  k ^= k >> 31;
  return k;
}

}  // namespace medley::ds
