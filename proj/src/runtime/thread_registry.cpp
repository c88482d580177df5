#include "medley/thread_registry.hpp"

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "medley/status_word.hpp"

namespace medley {
namespace {

std::mutex gLock;
std::vector<std::uint32_t> gFree;
std::atomic<std::uint32_t> gHighWater{0};

std::uint32_t acquireId() {
  std::lock_guard lk(gLock);
  if (!gFree.empty()) {
    const auto id = gFree.back();
    gFree.pop_back();
    return id;
  }
  const auto id = gHighWater.load(std::memory_order_relaxed);
  if (id >= StatusWord::kMaxThreads) throw std::runtime_error("medley: thread id space exhausted");
  gHighWater.store(id + 1, std::memory_order_release);
  return id;
}

struct IdHolder {
  std::uint32_t id = acquireId();
  ~IdHolder() {
    std::lock_guard lk(gLock);
    gFree.push_back(id);
  }
};

}  // namespace

std::uint32_t ThreadRegistry::currentId() {
  thread_local IdHolder holder;
  return holder.id;
}

std::uint32_t ThreadRegistry::highWater() noexcept {
  return gHighWater.load(std::memory_order_acquire);
}

}  // namespace medley
