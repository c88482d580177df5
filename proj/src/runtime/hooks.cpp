#include "medley/hooks.hpp"

#include "medley/status_word.hpp"

namespace medley {

namespace hooks {
namespace detail {
thread_local HookSink* tlsSink = nullptr;
}

void install(HookSink* sink) noexcept { detail::tlsSink = sink; }
}  // namespace hooks

std::string_view toString(HookPoint p) noexcept {
  switch (p) {
    case HookPoint::AfterBegin: return "after-begin";
    case HookPoint::AfterLoad: return "after-load";
    case HookPoint::AfterInstall: return "after-install";
    case HookPoint::BeforeValidate: return "before-validate";
    case HookPoint::BeforeFinalize: return "before-finalize";
    case HookPoint::MidUninstall: return "mid-uninstall";
    case HookPoint::BeforeCleanup: return "before-cleanup";
  }
  return "?";
}

std::string_view toString(TxState s) noexcept {
  switch (s) {
    case TxState::InPrep: return "InPrep";
    case TxState::InProg: return "InProg";
    case TxState::Committed: return "Committed";
    case TxState::Aborted: return "Aborted";
  }
  return "?";
}

}  // namespace medley
