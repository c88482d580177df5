#include "medley/verify/controller.hpp"

#include <stdexcept>

namespace medley::verify {

class Controller::Sink final : public HookSink {
 public:
  Sink(Controller& c, Worker& w) : c_(c), w_(w) {}
  void reached(HookPoint p) override {
    std::unique_lock lk(c_.mu_);
    bool park = false;
    switch (w_.mode) {
      case Mode::Step: park = true; break;
      case Mode::Until: park = (p == w_.target) && (--w_.remaining == 0); break;
      default: break;
    }
    if (!park) return;
    w_.mode = Mode::Parked;
    w_.at = p;
    c_.cv_.notify_all();
    c_.cv_.wait(lk, [&] { return w_.mode != Mode::Parked; });
    w_.at.reset();
  }

 private:
  Controller& c_;
  Worker& w_;
};

Controller::~Controller() { finishAll(); }

std::size_t Controller::spawn(std::function<void()> body) {
  std::unique_lock lk(mu_);
  workers_.push_back(std::make_unique<Worker>());
  Worker& w = *workers_.back();
  w.thread = std::thread([this, &w, body = std::move(body)] {
    {
      std::unique_lock lk2(mu_);
      cv_.wait(lk2, [&] { return w.mode != Mode::Parked; });
    }
    Sink sink(*this, w);
    hooks::install(&sink);
    try {
      body();
    } catch (...) {
      w.error = std::current_exception();
    }
    hooks::install(nullptr);
    std::unique_lock lk2(mu_);
    w.done = true;
    w.mode = Mode::Parked;
    cv_.notify_all();
  });
  return workers_.size() - 1;
}

std::optional<HookPoint> Controller::resume(std::size_t i, Mode m, HookPoint target, int k) {
  std::unique_lock lk(mu_);
  if (i >= workers_.size()) throw std::out_of_range("controller: no such thread");
  Worker& w = *workers_[i];
  if (w.done) return std::nullopt;
  w.target = target;
  w.remaining = k;
  w.mode = m;
  cv_.notify_all();
  cv_.wait(lk, [&] { return w.mode == Mode::Parked; });
  if (w.done) return std::nullopt;
  return w.at;
}

std::optional<HookPoint> Controller::step(std::size_t i) {
  return resume(i, Mode::Step, HookPoint::AfterBegin, 0);
}

std::optional<HookPoint> Controller::runUntil(std::size_t i, HookPoint p, int k) {
  if (k < 1) throw std::invalid_argument("controller: k must be positive");
  return resume(i, Mode::Until, p, k);
}

void Controller::runToCompletion(std::size_t i) { resume(i, Mode::Free, HookPoint::AfterBegin, 0); }

bool Controller::finished(std::size_t i) const {
  std::unique_lock lk(mu_);
  return workers_.at(i)->done;
}

std::optional<HookPoint> Controller::parkedAt(std::size_t i) const {
  std::unique_lock lk(mu_);
  return workers_.at(i)->at;
}

std::exception_ptr Controller::error(std::size_t i) const {
  std::unique_lock lk(mu_);
  return workers_.at(i)->error;
}

std::size_t Controller::size() const {
  std::unique_lock lk(mu_);
  return workers_.size();
}

void Controller::finishAll() {
  for (std::size_t i = 0; i < size(); ++i) runToCompletion(i);
  for (auto& w : workers_)
    if (w->thread.joinable()) w->thread.join();
}

}  // namespace medley::verify
