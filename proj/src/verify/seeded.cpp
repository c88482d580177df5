#include "medley/verify/seeded.hpp"

#include <optional>

namespace medley::verify {

namespace {

constexpr std::uint32_t kTableA = 0;
constexpr std::uint32_t kTableB = 1;
constexpr std::uint32_t kQueue = 2;
constexpr std::uint32_t kSkip = 3;
constexpr auto kNone = std::nullopt;

/// Small builder: transactions are appended with explicit intervals and
/// stamps; setup rows come first with stamp 0.
class Builder {
 public:
  Builder& setup(std::uint32_t s, OpName op, std::vector<std::uint64_t> args,
                 std::optional<std::uint64_t> res = kNone) {
    h_.push_back(event(0, 0, s, op, std::move(args), res, 0, 0, CommitKey{0, 0, 0}));
    return *this;
  }
  /// Opens transaction (tid, serial) over [inv, resp]; stamp 0 = aborted.
  Builder& tx(std::uint32_t tid, std::uint64_t serial, std::int64_t inv, std::int64_t resp,
              std::uint64_t stamp) {
    tid_ = tid;
    serial_ = serial;
    inv_ = inv;
    resp_ = resp;
    key_ = stamp == 0 ? std::nullopt : std::optional<CommitKey>(CommitKey{tid, serial, stamp});
    return *this;
  }
  Builder& op(std::uint32_t s, OpName op, std::vector<std::uint64_t> args,
              std::optional<std::uint64_t> res) {
    h_.push_back(event(tid_, serial_, s, op, std::move(args), res, inv_, resp_, key_));
    return *this;
  }
  History done() { return std::move(h_); }

 private:
  static HistoryEvent event(std::uint32_t tid, std::uint64_t serial, std::uint32_t s, OpName op,
                            std::vector<std::uint64_t> args, std::optional<std::uint64_t> res,
                            std::int64_t inv, std::int64_t resp, std::optional<CommitKey> key) {
    HistoryEvent e;
    e.tid = tid;
    e.serial = serial;
    e.structId = s;
    e.op = op;
    e.args = std::move(args);
    e.result = res;
    e.invocationNs = inv;
    e.responseNs = resp;
    e.commit = key;
    return e;
  }

  History h_;
  std::uint32_t tid_ = 0;
  std::uint64_t serial_ = 0;
  std::int64_t inv_ = 0, resp_ = 0;
  std::optional<CommitKey> key_;
};

using O = OpName;

}  // namespace

std::vector<SeededHistory> seededViolations() {
  std::vector<SeededHistory> out;

  // Two withdrawals of 30 both read 100 and both write 70.
  out.push_back({"lost update", Builder()
                                    .setup(kTableA, O::Put, {1, 100})
                                    .tx(1, 1, 10, 40, 1)
                                    .op(kTableA, O::Get, {1}, 100)
                                    .op(kTableA, O::Put, {1, 70}, 100)
                                    .tx(2, 1, 12, 42, 2)
                                    .op(kTableA, O::Get, {1}, 100)
                                    .op(kTableA, O::Put, {1, 70}, 100)
                                    .done()});

  // A committed reader observes an aborted writer's value.
  out.push_back({"dirty read", Builder()
                                   .setup(kTableA, O::Put, {1, 100})
                                   .tx(1, 1, 10, 30, 0)
                                   .op(kTableA, O::Put, {1, 50}, 100)
                                   .tx(2, 1, 15, 35, 1)
                                   .op(kTableA, O::Get, {1}, 50)
                                   .done()});

  // A reader sees the debit side before a transfer and the credit side after.
  out.push_back({"non-repeatable read across structures",
                 Builder()
                     .setup(kTableA, O::Put, {1, 100})
                     .setup(kTableB, O::Put, {1, 0})
                     .tx(1, 1, 10, 40, 1)
                     .op(kTableA, O::Put, {1, 70}, 100)
                     .op(kTableB, O::Put, {1, 30}, 0)
                     .tx(2, 1, 12, 45, 2)
                     .op(kTableA, O::Get, {1}, 100)
                     .op(kTableB, O::Get, {1}, 30)
                     .done()});

  // Results replay fine in stamp order, but the stamp order inverts two
  // transactions that did not overlap in time.
  out.push_back({"broken real-time order", Builder()
                                               .tx(1, 1, 10, 20, 2)
                                               .op(kTableA, O::Put, {1, 5}, kNone)
                                               .tx(2, 1, 30, 40, 1)
                                               .op(kTableA, O::Get, {1}, kNone)
                                               .done()});

  // Both check that two keys are present, each removes a different one.
  out.push_back({"write skew", Builder()
                                   .setup(kTableA, O::Put, {1, 1})
                                   .setup(kTableA, O::Put, {2, 1})
                                   .tx(1, 1, 10, 40, 1)
                                   .op(kTableA, O::Get, {1}, 1)
                                   .op(kTableA, O::Get, {2}, 1)
                                   .op(kTableA, O::Remove, {1}, 1)
                                   .tx(2, 1, 11, 41, 2)
                                   .op(kTableA, O::Get, {1}, 1)
                                   .op(kTableA, O::Get, {2}, 1)
                                   .op(kTableA, O::Remove, {2}, 1)
                                   .done()});

  out.push_back({"FIFO violation", Builder()
                                       .setup(kQueue, O::Enqueue, {1})
                                       .setup(kQueue, O::Enqueue, {2})
                                       .tx(1, 1, 10, 20, 1)
                                       .op(kQueue, O::Dequeue, {}, 2)
                                       .done()});

  out.push_back({"duplicate dequeue", Builder()
                                          .setup(kQueue, O::Enqueue, {7})
                                          .tx(1, 1, 10, 30, 1)
                                          .op(kQueue, O::Dequeue, {}, 7)
                                          .tx(2, 1, 12, 32, 2)
                                          .op(kQueue, O::Dequeue, {}, 7)
                                          .done()});

  // A later reader misses a key that an earlier, finished writer inserted.
  out.push_back({"phantom absence", Builder()
                                        .tx(1, 1, 10, 20, 1)
                                        .op(kTableA, O::Put, {5, 1}, kNone)
                                        .tx(2, 1, 30, 40, 2)
                                        .op(kTableA, O::Get, {5}, kNone)
                                        .done()});

  // A reader returns a value written by a transaction serialized after it.
  out.push_back({"read from the future", Builder()
                                             .tx(1, 1, 10, 30, 1)
                                             .op(kTableA, O::Get, {3}, 9)
                                             .tx(2, 1, 12, 32, 2)
                                             .op(kTableA, O::Put, {3, 9}, kNone)
                                             .done()});

  out.push_back({"double insert-if-absent", Builder()
                                                .tx(1, 1, 10, 30, 1)
                                                .op(kSkip, O::Insert, {4, 1}, 1)
                                                .tx(2, 1, 12, 32, 2)
                                                .op(kSkip, O::Insert, {4, 2}, 1)
                                                .done()});
  return out;
}

}  // namespace medley::verify
