#pragma once

#include <cstdint>
#include <string_view>

namespace medley {

enum class TxState : std::uint64_t {
  InPrep = 0,
  InProg = 1,
  Committed = 2,
  Aborted = 3,
};

std::string_view toString(TxState s) noexcept;

/// Packed descriptor status: bits 63..50 thread id, 49..2 serial, 1..0 state.
struct StatusWord {
  static constexpr unsigned kTidBits = 14;
  static constexpr unsigned kSerialBits = 48;
  static constexpr unsigned kTidShift = 50;
  static constexpr std::uint64_t kStateMask = 3;
  static constexpr std::uint64_t kSerialMask = (std::uint64_t{1} << kSerialBits) - 1;
  static constexpr std::uint64_t kMaxThreads = std::uint64_t{1} << kTidBits;

  std::uint64_t raw = 0;

  static constexpr StatusWord make(std::uint64_t tid, std::uint64_t serial, TxState s) {
    return {(tid << kTidShift) | ((serial & kSerialMask) << 2) |
            static_cast<std::uint64_t>(s)};
  }

  constexpr std::uint64_t tid() const { return raw >> kTidShift; }
  constexpr std::uint64_t serial() const { return (raw >> 2) & kSerialMask; }
  constexpr TxState state() const { return static_cast<TxState>(raw & kStateMask); }
  /// tid|serial with the state bits cleared; identifies one transaction.
  constexpr std::uint64_t instance() const { return raw & ~kStateMask; }
  constexpr bool sameInstance(StatusWord o) const { return instance() == o.instance(); }
  constexpr bool terminal() const {
    return state() == TxState::Committed || state() == TxState::Aborted;
  }
  constexpr StatusWord with(TxState s) const {
    return {instance() | static_cast<std::uint64_t>(s)};
  }
  /// Next serial, state InPrep.
  constexpr StatusWord next() const { return {instance() + 4}; }

  friend constexpr bool operator==(StatusWord, StatusWord) = default;
};

/// The only edges the status machine allows for a fixed (tid, serial).
constexpr bool isLegalTransition(TxState from, TxState to) noexcept {
  switch (from) {
    case TxState::InPrep:
      return to == TxState::InProg || to == TxState::Aborted;
    case TxState::InProg:
      return to == TxState::Committed || to == TxState::Aborted;
    default:
      return false;
  }
}

}  // namespace medley
