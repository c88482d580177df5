#pragma once

#include <cstdint>
#include <functional>

#include "medley/cas_cell.hpp"
#include "medley/composable.hpp"
#include "medley/tx_manager.hpp"

namespace medley::test {

/// Opens the protected Composable hooks to test code.
struct Probe : Composable {
  using Composable::Composable;
  using Composable::addToCleanups;
  using Composable::addToReadSet;
  using Composable::tDelete;
  using Composable::tNew;
  using Composable::tRetire;
};

/// Moves a fresh cell to (value, counter) with counter even.
inline void setPair(CasCell& c, std::uint64_t value, std::uint64_t counter) {
  c.init(value);
  const Pair cur = c.loadPair();
  c.casPair(cur, {value, counter});
}

/// Runs `body` in a transaction; true if it committed.
inline bool tryTx(TxManager& mgr, const std::function<void()>& body) {
  try {
    mgr.txBegin();
    body();
    mgr.txEnd();
    return true;
  } catch (const TransactionAborted&) {
    return false;
  }
}

}  // namespace medley::test
