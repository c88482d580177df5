#include "medley/verify/reference_model.hpp"

#include <stdexcept>
#include <string>

namespace medley::verify {

namespace {

void requireArity(OpName op, const std::vector<std::uint64_t>& args, std::size_t n) {
  if (args.size() != n)
    throw std::invalid_argument(std::string(toString(op)) + " takes " + std::to_string(n) +
                                " argument(s), got " + std::to_string(args.size()));
}

}  // namespace

std::optional<std::uint64_t> ReferenceModel::apply(std::uint32_t structId, OpName op,
                                                   const std::vector<std::uint64_t>& args) {
  const bool isQueueOp = op == OpName::Enqueue || op == OpName::Dequeue;
  if (isQueueOp ? maps_.count(structId) != 0 : queues_.count(structId) != 0)
    throw std::invalid_argument("structure " + std::to_string(structId) +
                                " used as both a map and a queue");

  if (isQueueOp) {
    auto& q = queues_[structId];
    if (op == OpName::Enqueue) {
      requireArity(op, args, 1);
      q.push_back(args[0]);
      return std::nullopt;
    }
    requireArity(op, args, 0);
    if (q.empty()) return std::nullopt;
    const auto v = q.front();
    q.pop_front();
    return v;
  }

  auto& m = maps_[structId];
  switch (op) {
    case OpName::Get: {
      requireArity(op, args, 1);
      auto it = m.find(args[0]);
      if (it == m.end()) return std::nullopt;
      return it->second;
    }
    case OpName::Put: {
      requireArity(op, args, 2);
      auto [it, inserted] = m.try_emplace(args[0], args[1]);
      if (inserted) return std::nullopt;
      const auto prior = it->second;
      it->second = args[1];
      return prior;
    }
    case OpName::Remove: {
      requireArity(op, args, 1);
      auto it = m.find(args[0]);
      if (it == m.end()) return std::nullopt;
      const auto prior = it->second;
      m.erase(it);
      return prior;
    }
    case OpName::Insert: {
      requireArity(op, args, 2);
      return m.try_emplace(args[0], args[1]).second ? 1 : 0;
    }
    default:
      break;
  }
  throw std::invalid_argument("unreachable operation");
}

const std::map<std::uint64_t, std::uint64_t>& ReferenceModel::mapOf(std::uint32_t structId) const {
  static const std::map<std::uint64_t, std::uint64_t> empty;
  auto it = maps_.find(structId);
  return it == maps_.end() ? empty : it->second;
}

const std::deque<std::uint64_t>& ReferenceModel::queueOf(std::uint32_t structId) const {
  static const std::deque<std::uint64_t> empty;
  auto it = queues_.find(structId);
  return it == queues_.end() ? empty : it->second;
}

}  // namespace medley::verify
