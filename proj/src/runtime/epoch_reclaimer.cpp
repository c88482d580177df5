#include "medley/epoch_reclaimer.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include "medley/status_word.hpp"
#include "medley/thread_registry.hpp"

namespace medley {

std::uint32_t EpochReclaimer::cadenceFromEnvironment() {
  if (const char* env = std::getenv("MEDLEY_EPOCH_CADENCE")) {
    try {
      const auto v = std::stoul(env);
      if (v > 0) return static_cast<std::uint32_t>(v);
    } catch (...) {
    }
  }
  return kDefaultCadence;
}

EpochReclaimer::EpochReclaimer(std::uint32_t cadence)
    : cadence_(cadence == 0 ? cadenceFromEnvironment() : cadence),
      slots_(new std::atomic<Slot*>[StatusWord::kMaxThreads]) {
  for (std::uint64_t i = 0; i < StatusWord::kMaxThreads; ++i)
    slots_[i].store(nullptr, std::memory_order_relaxed);
}

EpochReclaimer::~EpochReclaimer() {
  for (std::uint64_t i = 0; i < StatusWord::kMaxThreads; ++i) {
    Slot* s = slots_[i].load(std::memory_order_acquire);
    if (s == nullptr) continue;
    for (auto& r : s->retired) r.deleter(r.block);
    delete s;
  }
}

EpochReclaimer::Slot& EpochReclaimer::localSlot() {
  const auto tid = ThreadRegistry::currentId();
  Slot* s = slots_[tid].load(std::memory_order_acquire);
  if (s == nullptr) {
    // Only the thread owning `tid` ever creates its slot.
    s = new Slot;
    slots_[tid].store(s, std::memory_order_release);
  }
  return *s;
}

void EpochReclaimer::enter() {
  Slot& s = localSlot();
  if (s.depth++ > 0) return;
  if (++s.opsSinceAdvance >= cadence_) {
    s.opsSinceAdvance = 0;
    epoch_.fetch_add(1, std::memory_order_acq_rel);
    collectSlot(s, oldestAnnounced());
  }
  s.announce.store(epoch_.load(std::memory_order_seq_cst), std::memory_order_seq_cst);
}

void EpochReclaimer::exit() {
  Slot& s = localSlot();
  if (--s.depth > 0) return;
  s.announce.store(kIdle, std::memory_order_release);
}

bool EpochReclaimer::inRegion() const {
  const Slot* s = slots_[ThreadRegistry::currentId()].load(std::memory_order_acquire);
  return s != nullptr && s->depth > 0;
}

void EpochReclaimer::retireRaw(void* block, void (*deleter)(void*)) {
  Slot& s = localSlot();
  const auto e = epoch_.load(std::memory_order_seq_cst);
  std::size_t backlog;
  {
    std::lock_guard lk(s.lock);
    s.retired.push_back({block, deleter, e});
    backlog = s.retired.size();
  }
  retired_.fetch_add(1, std::memory_order_relaxed);
  if (backlog > 2 * static_cast<std::size_t>(cadence_)) {
    epoch_.fetch_add(1, std::memory_order_acq_rel);
    collectSlot(s, oldestAnnounced());
  }
}

std::uint64_t EpochReclaimer::oldestAnnounced() const {
  std::uint64_t oldest = kIdle;
  const auto n = ThreadRegistry::highWater();
  for (std::uint32_t i = 0; i < n; ++i) {
    const Slot* s = slots_[i].load(std::memory_order_acquire);
    if (s == nullptr) continue;
    oldest = std::min(oldest, s->announce.load(std::memory_order_seq_cst));
  }
  return oldest;
}

std::size_t EpochReclaimer::collectSlot(Slot& s, std::uint64_t safeBelow) {
  std::vector<Retired> ready;
  {
    std::lock_guard lk(s.lock);
    auto split = std::partition(s.retired.begin(), s.retired.end(),
                                [&](const Retired& r) { return r.epoch >= safeBelow; });
    ready.assign(split, s.retired.end());
    s.retired.erase(split, s.retired.end());
  }
  for (auto& r : ready) r.deleter(r.block);
  freed_.fetch_add(ready.size(), std::memory_order_relaxed);
  return ready.size();
}

std::size_t EpochReclaimer::collect() {
  epoch_.fetch_add(1, std::memory_order_acq_rel);
  const auto safeBelow = oldestAnnounced();
  std::size_t freed = 0;
  const auto n = ThreadRegistry::highWater();
  for (std::uint32_t i = 0; i < n; ++i) {
    Slot* s = slots_[i].load(std::memory_order_acquire);
    if (s != nullptr) freed += collectSlot(*s, safeBelow);
  }
  return freed;
}

std::size_t EpochReclaimer::pending() const {
  std::size_t total = 0;
  const auto n = ThreadRegistry::highWater();
  for (std::uint32_t i = 0; i < n; ++i) {
    const Slot* s = slots_[i].load(std::memory_order_acquire);
    if (s == nullptr) continue;
    std::lock_guard lk(s->lock);
    total += s->retired.size();
  }
  return total;
}

}  // namespace medley
