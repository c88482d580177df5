#pragma once

#include <cstdint>
#include <string_view>

namespace medley {

/// Named protocol points at which a controlled thread can be suspended.
enum class HookPoint : std::uint8_t {
  AfterBegin,
  AfterLoad,
  AfterInstall,
  BeforeValidate,
  BeforeFinalize,
  MidUninstall,
  BeforeCleanup,
};

inline constexpr HookPoint kAllHookPoints[] = {
    HookPoint::AfterBegin,     HookPoint::AfterLoad,      HookPoint::AfterInstall,
    HookPoint::BeforeValidate, HookPoint::BeforeFinalize, HookPoint::MidUninstall,
    HookPoint::BeforeCleanup,
};

std::string_view toString(HookPoint p) noexcept;

/// Receives hook notifications for the thread it is installed on.
class HookSink {
 public:
  virtual ~HookSink() = default;
  virtual void reached(HookPoint p) = 0;
};

namespace hooks {

/// Installs `sink` for the calling thread (nullptr removes it).
void install(HookSink* sink) noexcept;

namespace detail {
extern thread_local HookSink* tlsSink;
}

inline void reach(HookPoint p) {
#ifndef MEDLEY_NO_HOOKS
  if (detail::tlsSink != nullptr) [[unlikely]]
    detail::tlsSink->reached(p);
#else
  (void)p;
#endif
}

}  // namespace hooks
}  // namespace medley
