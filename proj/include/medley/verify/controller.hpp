#pragma once

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "medley/hooks.hpp"

namespace medley::verify {

/// Token-passing scheduler over the protocol hook points.
///
/// Each spawned thread starts parked. At any time at most one thread runs:
/// the controller hands it the token, and takes it back when the thread
/// parks at a hook point or finishes. A thread left parked is suspended at a
/// protocol point for as long as the test wants.
class Controller {
 public:
  Controller() = default;
  ~Controller();
  Controller(const Controller&) = delete;
  Controller& operator=(const Controller&) = delete;

  /// Returns the thread's index. The body runs only when first scheduled.
  std::size_t spawn(std::function<void()> body);

  /// Runs thread `i` to its next hook point. nullopt: the body finished.
  std::optional<HookPoint> step(std::size_t i);
  /// Runs thread `i` until its `k`-th arrival at `p`. nullopt: finished first.
  std::optional<HookPoint> runUntil(std::size_t i, HookPoint p, int k = 1);
  /// Runs thread `i`, ignoring hooks, until its body returns.
  void runToCompletion(std::size_t i);

  bool finished(std::size_t i) const;
  std::optional<HookPoint> parkedAt(std::size_t i) const;
  /// Exception escaping the body of thread `i`, if any.
  std::exception_ptr error(std::size_t i) const;
  std::size_t size() const;

  /// Lets every unfinished thread finish, one at a time, and joins them.
  void finishAll();

 private:
  enum class Mode { Parked, Step, Until, Free };
  struct Worker {
    Mode mode = Mode::Parked;
    HookPoint target = HookPoint::AfterBegin;
    int remaining = 0;
    bool done = false;
    std::optional<HookPoint> at;
    std::exception_ptr error;
    std::thread thread;
  };
  class Sink;

  std::optional<HookPoint> resume(std::size_t i, Mode m, HookPoint target, int k);

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::vector<std::unique_ptr<Worker>> workers_;
};

}  // namespace medley::verify
