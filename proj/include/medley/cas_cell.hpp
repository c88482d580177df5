#pragma once

#include <cstdint>

#include "medley/atomic_pair.hpp"

namespace medley {

class Descriptor;

/// Result of a transactional CAS.
enum class CasOutcome : std::uint8_t {
  Failed,       // current value differs from expected
  Applied,      // value changed in place, visible to everyone now
  Speculated,   // recorded in the write set; takes effect at commit
};

/// A 64-bit word augmented with a 64-bit version counter.
///
/// An odd counter means the value field holds a descriptor reference; an
/// even counter means it holds an application value. Every successful
/// mutation advances the counter: installs and uninstalls by one, plain
/// value updates by two.
class CasCell {
 public:
  constexpr CasCell() = default;
  constexpr explicit CasCell(std::uint64_t initial) : pair_(Pair{initial, 0}) {}

  CasCell(const CasCell&) = delete;
  CasCell& operator=(const CasCell&) = delete;

  /// Raw snapshot, possibly holding a descriptor.
  Pair loadPair() const noexcept { return pair_.load(); }
  bool casPair(Pair expected, Pair desired) noexcept {
    return pair_.compareExchange(expected, desired);
  }
  /// Initialisation before the cell is shared.
  void init(std::uint64_t v) noexcept { pair_.init({v, 0}); }

  static bool holdsDescriptor(Pair p) noexcept { return (p.counter & 1) != 0; }

  // Regular atomic methods. These resolve any installed descriptor first and
  // never record anything in a transaction.
  std::uint64_t load();
  void store(std::uint64_t desired);
  bool cas(std::uint64_t expected, std::uint64_t desired);

  // Transaction-aware methods. Outside a transaction (no operation context,
  // or a standalone one) these behave like the regular methods.
  std::uint64_t nbtcLoad();
  CasOutcome nbtcCompareExchange(std::uint64_t expected, std::uint64_t desired, bool linPt,
                                 bool pubPt);
  bool nbtcCas(std::uint64_t expected, std::uint64_t desired, bool linPt, bool pubPt) {
    return nbtcCompareExchange(expected, desired, linPt, pubPt) != CasOutcome::Failed;
  }

 private:
  /// Load that helps any foreign descriptor out of the way.
  Pair loadResolved(Descriptor* own);

  AtomicPair pair_;
};

static_assert(sizeof(CasCell) == 16);

}  // namespace medley
