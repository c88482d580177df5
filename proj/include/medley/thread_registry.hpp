#pragma once

#include <cstdint>

namespace medley {

/// Dense small thread ids. An id is assigned on a thread's first call and
/// returned to the pool when the thread exits.
class ThreadRegistry {
 public:
  static std::uint32_t currentId();
  /// One past the largest id ever handed out.
  static std::uint32_t highWater() noexcept;
};

}  // namespace medley
