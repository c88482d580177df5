#include "medley/tx_manager.hpp"

#include <cassert>
#include <stdexcept>

#include "medley/hooks.hpp"
#include "medley/thread_registry.hpp"

namespace medley {

namespace detail {
thread_local TxContext* tlsContext = nullptr;
}

TxManager::TxManager(TxManagerOptions opts)
    : slots_(new std::atomic<ThreadSlot*>[StatusWord::kMaxThreads]),
      reclaimer_(opts.epochCadence) {
  for (std::uint64_t i = 0; i < StatusWord::kMaxThreads; ++i)
    slots_[i].store(nullptr, std::memory_order_relaxed);
  stamps_.enabled.store(opts.stampCommits, std::memory_order_relaxed);
}

TxManager::~TxManager() {
  for (std::uint64_t i = 0; i < StatusWord::kMaxThreads; ++i) {
    ThreadSlot* s = slots_[i].load(std::memory_order_acquire);
    if (s == nullptr) continue;
    if (detail::tlsContext == &s->ctx) detail::tlsContext = nullptr;
    delete s;
  }
}

TxManager::ThreadSlot& TxManager::slot() {
  const auto tid = ThreadRegistry::currentId();
  ThreadSlot* s = slots_[tid].load(std::memory_order_acquire);
  if (s == nullptr) {
    s = new ThreadSlot(tid, stamps_);
    s->ctx.manager = this;
    s->ctx.descriptor = &s->desc;
    slots_[tid].store(s, std::memory_order_release);
  }
  return *s;
}

TxContext& TxManager::context() { return slot().ctx; }

bool TxManager::inTransaction() { return context().inTransaction; }

void TxManager::txBegin() {
  TxContext& ctx = context();
  if (ctx.inTransaction) throw std::logic_error("medley: txBegin inside an active transaction");
  reclaimer_.enter();
  ctx.descriptor->begin();
  resetContext(ctx);
  ctx.inTransaction = true;
  ctx.outerContext = detail::tlsContext;
  detail::tlsContext = &ctx;
  hooks::reach(HookPoint::AfterBegin);
}

void TxManager::resetContext(TxContext& c) {
  c.specInterval = false;
  c.pendingReads.clear();
  c.cleanups.clear();
  c.allocUndos.clear();
  c.commitActions.clear();
}

void TxManager::txEnd() {
  TxContext& ctx = context();
  if (!ctx.inTransaction) throw std::logic_error("medley: txEnd without an active transaction");
  Descriptor& desc = *ctx.descriptor;

  if (!desc.setReady()) txAbort();
  StatusWord d = desc.status();
  desc.ensureStamp(d);
  hooks::reach(HookPoint::BeforeValidate);
  if (!desc.validateReads(d))
    desc.abort(d);
  else if (d.state() == TxState::InProg)
    desc.commit(d);
  d = desc.status();
  if (d.state() != TxState::Committed) txAbort();

  desc.uninstall(d);
  ctx.lastCommitStamp = desc.stampFor(d);
  ctx.inTransaction = false;
  hooks::reach(HookPoint::BeforeCleanup);
  // Cleanups run as standalone work, still inside the SMR region.
  for (auto& f : ctx.cleanups) f();
  for (auto& f : ctx.commitActions) f();
  resetContext(ctx);
  ctx.bump(ctx.commits);
  detail::tlsContext = ctx.outerContext;
  reclaimer_.exit();
}

void TxManager::txAbort() {
  TxContext& ctx = context();
  if (!ctx.inTransaction) throw std::logic_error("medley: txAbort without an active transaction");
  Descriptor& desc = *ctx.descriptor;
  desc.abort(desc.status());
  const StatusWord d = desc.status();
  assert(d.state() == TxState::Aborted);
  finishAbort(d);
  throw TransactionAborted{};
}

void TxManager::finishAbort(StatusWord d) {
  TxContext& ctx = context();
  ctx.descriptor->uninstall(d);
  ctx.inTransaction = false;
  for (auto it = ctx.allocUndos.rbegin(); it != ctx.allocUndos.rend(); ++it) (*it)();
  resetContext(ctx);
  ctx.bump(ctx.aborts);
  detail::tlsContext = ctx.outerContext;
  reclaimer_.exit();
}

bool TxManager::validateReads() {
  TxContext& ctx = context();
  if (!ctx.inTransaction) return true;
  return ctx.descriptor->validateReads(ctx.descriptor->status());
}

TxManager::Counters TxManager::counters() const {
  Counters c;
  const auto n = ThreadRegistry::highWater();
  for (std::uint32_t i = 0; i < n; ++i) {
    const ThreadSlot* s = slots_[i].load(std::memory_order_acquire);
    if (s == nullptr) continue;
    c.allocs += s->ctx.allocs.load(std::memory_order_relaxed);
    c.frees += s->ctx.frees.load(std::memory_order_relaxed);
    c.commits += s->ctx.commits.load(std::memory_order_relaxed);
    c.aborts += s->ctx.aborts.load(std::memory_order_relaxed);
  }
  c.retired = reclaimer_.retiredTotal();
  c.reclaimed = reclaimer_.freedTotal();
  return c;
}

}  // namespace medley
