#include "medley/descriptor.hpp"

#include <cassert>

#include "medley/cas_cell.hpp"
#include "medley/hooks.hpp"

namespace medley {

Descriptor::Descriptor(std::uint32_t tid, StampSource& stamps)
    : tid_(tid), stamps_(stamps), status_(StatusWord::make(tid, 0, TxState::InPrep).raw) {}

bool Descriptor::stsCas(StatusWord d, TxState from, TxState to) noexcept {
  if (!isLegalTransition(from, to)) return false;
  auto expected = d.with(from).raw;
  return status_.compare_exchange_strong(expected, d.with(to).raw, std::memory_order_seq_cst);
}

bool Descriptor::setReady() noexcept {
  return stsCas(status(), TxState::InPrep, TxState::InProg);
}

bool Descriptor::commit(StatusWord d) noexcept {
  return stsCas(d, TxState::InProg, TxState::Committed);
}

bool Descriptor::abort(StatusWord d) noexcept {
  // Only InPrep and InProg can move to Aborted.
  if (d.terminal()) return false;
  return stsCas(d, d.state(), TxState::Aborted);
}

void Descriptor::begin() noexcept {
  reads_.clear();
  writes_.clear();
  status_.store(status().next().raw, std::memory_order_seq_cst);
}

void Descriptor::tryFinalize(CasCell& cell, Pair observed) {
  StatusWord d = status();
  // The cell still holding `observed` pins `d` to the installing transaction.
  if (cell.loadPair() != observed) return;
  hooks::reach(HookPoint::BeforeFinalize);
  if (d.state() == TxState::InPrep) {
    abort(d);
    const StatusWord now = status();
    if (!now.sameInstance(d)) return;
    d = now;
  }
  if (d.state() == TxState::InProg) {
    ensureStamp(d);
    if (validateReads(d))
      commit(d);
    else
      abort(d);
  }
  const StatusWord now = status();
  if (!now.sameInstance(d) || !now.terminal()) return;
  uninstall(now);
}

bool Descriptor::validateReads(StatusWord d) const {
  const auto self = ref();
  const auto n = reads_.size();
  const bool ok = reads_.forEach(n, [&](const ReadEntry& e) {
    CasCell* cell = e.cell.load(std::memory_order_acquire);
    const Pair recorded{e.value.load(std::memory_order_acquire),
                        e.counter.load(std::memory_order_acquire)};
    if (!status().sameInstance(d) || cell == nullptr) return false;
    const Pair now = cell->loadPair();
    if (now == recorded) return true;
    // Our own later install over a location we read: the install CAS
    // started from exactly the recorded version.
    return now.value == self && now.counter == recorded.counter + 1;
  });
  return ok && status().sameInstance(d);
}

void Descriptor::uninstall(StatusWord d) {
  assert(d.terminal());
  const bool committed = d.state() == TxState::Committed;
  const auto self = ref();
  const auto n = writes_.size();
  writes_.forEach(n, [&](const WriteEntry& e) {
    CasCell* cell = e.cell.load(std::memory_order_acquire);
    const auto oldValue = e.oldValue.load(std::memory_order_acquire);
    const auto oldCounter = e.oldCounter.load(std::memory_order_acquire);
    const auto newValue = e.newValue.load(std::memory_order_acquire);
    if (!status().sameInstance(d)) return false;
    if (cell == nullptr) return true;
    cell->casPair({self, oldCounter + 1}, {committed ? newValue : oldValue, oldCounter + 2});
    hooks::reach(HookPoint::MidUninstall);
    return true;
  });
}

void Descriptor::recordRead(CasCell& cell, Pair observed) {
  assert(!CasCell::holdsDescriptor(observed));
  const auto n = reads_.size();
  for (std::size_t i = 0; i < n; ++i) {
    ReadEntry& e = reads_[i];
    if (e.cell.load(std::memory_order_relaxed) == &cell) {
      e.value.store(observed.value, std::memory_order_release);
      e.counter.store(observed.counter, std::memory_order_release);
      return;
    }
  }
  ReadEntry& e = reads_.append();
  e.cell.store(&cell, std::memory_order_release);
  e.value.store(observed.value, std::memory_order_release);
  e.counter.store(observed.counter, std::memory_order_release);
  reads_.publish();
}

WriteEntry& Descriptor::recordWrite(CasCell& cell, Pair old, std::uint64_t desired) {
  assert(!CasCell::holdsDescriptor(old));
  // A stale entry for the same cell (left by an install that a helper has
  // since undone) is dropped rather than rewritten in place.
  if (WriteEntry* stale = findWrite(cell)) dropWrite(*stale);
  WriteEntry& e = writes_.append();
  e.cell.store(&cell, std::memory_order_release);
  e.oldValue.store(old.value, std::memory_order_release);
  e.oldCounter.store(old.counter, std::memory_order_release);
  e.newValue.store(desired, std::memory_order_release);
  writes_.publish();
  return e;
}

void Descriptor::dropWrite(WriteEntry& e) noexcept {
  e.cell.store(nullptr, std::memory_order_release);
}

WriteEntry* Descriptor::findWrite(const CasCell& cell) noexcept {
  for (auto i = writes_.size(); i-- > 0;) {
    WriteEntry& e = writes_[i];
    if (e.cell.load(std::memory_order_relaxed) == &cell) return &e;
  }
  return nullptr;
}

std::uint64_t Descriptor::ensureStamp(StatusWord d) noexcept {
  if (!stamps_.enabled.load(std::memory_order_relaxed)) return 0;
  for (;;) {
    const Pair cur = stamp_.load();
    if (cur.counter == d.serial()) return cur.value;
    if (cur.counter > d.serial()) return 0;  // helper running late
    const auto candidate = stamps_.draw();
    if (!status().sameInstance(d)) return 0;
    stamp_.compareExchange(cur, {candidate, d.serial()});
  }
}

std::uint64_t Descriptor::stampFor(StatusWord d) const noexcept {
  const Pair cur = stamp_.load();
  return cur.counter == d.serial() ? cur.value : 0;
}

}  // namespace medley
