#include "medley/cas_cell.hpp"

#include <cassert>

#include "medley/descriptor.hpp"
#include "medley/hooks.hpp"
#include "medley/tx_manager.hpp"

namespace medley {
namespace {

TxContext* activeTx() noexcept {
  TxContext* ctx = currentContext();
  return (ctx != nullptr && ctx->inTransaction) ? ctx : nullptr;
}

}  // namespace

Pair CasCell::loadResolved(Descriptor* own) {
  for (;;) {
    const Pair p = loadPair();
    if (!holdsDescriptor(p)) return p;
    Descriptor* d = Descriptor::fromRef(p.value);
    if (d == own) return p;
    d->tryFinalize(*this, p);
  }
}

std::uint64_t CasCell::load() { return loadResolved(nullptr).value; }

void CasCell::store(std::uint64_t desired) {
  for (;;) {
    const Pair p = loadResolved(nullptr);
    if (casPair(p, {desired, p.counter + 2})) return;
  }
}

bool CasCell::cas(std::uint64_t expected, std::uint64_t desired) {
  for (;;) {
    const Pair p = loadResolved(nullptr);
    if (p.value != expected) return false;
    if (casPair(p, {desired, p.counter + 2})) return true;
  }
}

std::uint64_t CasCell::nbtcLoad() {
  TxContext* tx = activeTx();
  if (tx == nullptr) return load();
  const Pair p = loadResolved(tx->descriptor);
  if (holdsDescriptor(p)) {
    // Our own speculative write: serve it and enter the speculation interval.
    tx->specInterval = true;
    WriteEntry* e = tx->descriptor->findWrite(*this);
    assert(e != nullptr);
    tx->bufferRead(*this, p, true);
    return e->newValue.load(std::memory_order_relaxed);
  }
  tx->bufferRead(*this, p, false);
  hooks::reach(HookPoint::AfterLoad);
  return p.value;
}

CasOutcome CasCell::nbtcCompareExchange(std::uint64_t expected, std::uint64_t desired,
                                        bool linPt, bool pubPt) {
  TxContext* tx = activeTx();
  if (tx == nullptr) return cas(expected, desired) ? CasOutcome::Applied : CasOutcome::Failed;

  Descriptor* own = tx->descriptor;
  const bool intervalBefore = tx->specInterval;
  for (;;) {
    const Pair p = loadResolved(own);
    if (holdsDescriptor(p)) {
      tx->specInterval = true;
      WriteEntry* e = own->findWrite(*this);
      assert(e != nullptr);
      if (e->newValue.load(std::memory_order_relaxed) != expected) return CasOutcome::Failed;
      e->newValue.store(desired, std::memory_order_release);
      if (linPt) tx->specInterval = false;
      return CasOutcome::Speculated;
    }
    if (p.value != expected) {
      tx->specInterval = intervalBefore;
      return CasOutcome::Failed;
    }
    if (pubPt) tx->specInterval = true;
    if (!tx->specInterval) {
      if (casPair(p, {desired, p.counter + 2})) return CasOutcome::Applied;
      continue;
    }
    WriteEntry& e = own->recordWrite(*this, p, desired);
    if (casPair(p, {own->ref(), p.counter + 1})) {
      hooks::reach(HookPoint::AfterInstall);
      if (linPt) tx->specInterval = false;
      return CasOutcome::Speculated;
    }
    own->dropWrite(e);
  }
}

}  // namespace medley
