#pragma once

#include <string>
#include <vector>

#include "medley/verify/history.hpp"

namespace medley::verify {

struct SeededHistory {
  std::string name;
  History history;
};

/// Hand-built histories that no strictly serializable execution can
/// produce. The checker must reject every one.
std::vector<SeededHistory> seededViolations();

}  // namespace medley::verify
