#pragma once

#include <cstddef>

#include "medley/verify/checker.hpp"
#include "medley/verify/history.hpp"

namespace medley::verify {

/// Wing-Gong search over a history of standalone operations (commit keys
/// and serials are ignored). Map operations are split per (structure, key),
/// which is sound because maps are compositional per key; queue operations
/// are checked per structure. Each partition may hold at most 64 events.
Verdict checkLinearizable(const History& h);

}  // namespace medley::verify
