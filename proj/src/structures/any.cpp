#include "medley/ds/any.hpp"

#include <stdexcept>
#include <string>

#include "medley/ds/hash_table.hpp"
#include "medley/ds/ms_queue.hpp"
#include "medley/ds/skip_list.hpp"

namespace medley::ds {

namespace {

[[noreturn]] void unsupported(StructureKind k, OpName op) {
  throw std::invalid_argument(std::string(toString(k)) + " has no " + std::string(toString(op)) +
                              " operation");
}

template <class Policy>
class HashImpl final : public AnyStructure {
 public:
  HashImpl(TxManager& mgr, std::size_t buckets) : t_(mgr, buckets) {}
  StructureKind kind() const noexcept override { return StructureKind::HashTable; }
  bool original() const noexcept override { return std::is_same_v<Policy, PlainPolicy>; }
  TxManager& manager() const noexcept override { return t_.manager(); }
  std::optional<std::uint64_t> apply(OpName op, std::uint64_t a, std::uint64_t b) override {
    switch (op) {
      case OpName::Get: return t_.get(a);
      case OpName::Put: return t_.put(a, b);
      case OpName::Remove: return t_.remove(a);
      default: unsupported(kind(), op);
    }
  }
  std::vector<std::uint64_t> contents() const override {
    std::vector<std::uint64_t> out;
    for (auto [k, v] : t_.snapshot()) {
      out.push_back(k);
      out.push_back(v);
    }
    return out;
  }
  std::optional<std::string> audit() const override { return t_.audit(); }
  std::size_t reachableNodes() const override { return t_.reachableNodes(); }

 private:
  mutable HashTable<Policy> t_;
};

template <class Policy>
class SkipImpl final : public AnyStructure {
 public:
  explicit SkipImpl(TxManager& mgr) : s_(mgr) {}
  StructureKind kind() const noexcept override { return StructureKind::SkipList; }
  bool original() const noexcept override { return std::is_same_v<Policy, PlainPolicy>; }
  TxManager& manager() const noexcept override { return s_.manager(); }
  std::optional<std::uint64_t> apply(OpName op, std::uint64_t a, std::uint64_t b) override {
    switch (op) {
      case OpName::Get: return s_.get(a);
      case OpName::Insert: return s_.insert(a, b) ? 1 : 0;
      case OpName::Remove: return s_.remove(a);
      default: unsupported(kind(), op);
    }
  }
  std::vector<std::uint64_t> contents() const override {
    std::vector<std::uint64_t> out;
    for (auto [k, v] : s_.snapshot()) {
      out.push_back(k);
      out.push_back(v);
    }
    return out;
  }
  std::optional<std::string> audit() const override { return s_.audit(); }
  std::size_t reachableNodes() const override { return s_.reachableNodes(); }

 private:
  mutable SkipList<Policy> s_;
};

template <class Policy>
class QueueImpl final : public AnyStructure {
 public:
  explicit QueueImpl(TxManager& mgr) : q_(mgr) {}
  StructureKind kind() const noexcept override { return StructureKind::Queue; }
  bool original() const noexcept override { return std::is_same_v<Policy, PlainPolicy>; }
  TxManager& manager() const noexcept override { return q_.manager(); }
  std::optional<std::uint64_t> apply(OpName op, std::uint64_t a, std::uint64_t) override {
    switch (op) {
      case OpName::Enqueue: q_.enqueue(a); return std::nullopt;
      case OpName::Dequeue: return q_.dequeue();
      default: unsupported(kind(), op);
    }
  }
  std::vector<std::uint64_t> contents() const override { return q_.snapshot(); }
  std::optional<std::string> audit() const override { return q_.audit(); }
  std::size_t reachableNodes() const override { return q_.reachableNodes(); }

 private:
  mutable MsQueue<Policy> q_;
};

template <class Policy>
std::unique_ptr<AnyStructure> make(StructureKind kind, TxManager& mgr, std::size_t buckets) {
  switch (kind) {
    case StructureKind::HashTable: return std::make_unique<HashImpl<Policy>>(mgr, buckets);
    case StructureKind::SkipList: return std::make_unique<SkipImpl<Policy>>(mgr);
    case StructureKind::Queue: return std::make_unique<QueueImpl<Policy>>(mgr);
  }
  throw std::invalid_argument("unknown structure kind");
}

}  // namespace

bool AnyStructure::supports(OpName op) const noexcept {
  switch (kind()) {
    case StructureKind::HashTable:
      return op == OpName::Get || op == OpName::Put || op == OpName::Remove;
    case StructureKind::SkipList:
      return op == OpName::Get || op == OpName::Insert || op == OpName::Remove;
    case StructureKind::Queue:
      return op == OpName::Enqueue || op == OpName::Dequeue;
  }
  return false;
}

std::unique_ptr<AnyStructure> makeStructure(StructureKind kind, TxManager& mgr, bool original,
                                            std::size_t buckets) {
  return original ? make<PlainPolicy>(kind, mgr, buckets) : make<MedleyPolicy>(kind, mgr, buckets);
}

}  // namespace medley::ds
