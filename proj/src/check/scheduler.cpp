#include "pmtx/check/scheduler.hpp"

#include <thread>

namespace pmtx::check {

namespace {

// Unwinds a worker parked in yield() once another worker has failed.
struct Stopped {};

}  // namespace

Scheduler::Scheduler(Options opts) : opts_(std::move(opts)), rng_(opts_.seed.value_or(0)) {}

ThreadId Scheduler::pick(ThreadId from) {
  const std::size_t n = done_.size();
  while (cursor_ < opts_.schedule.size()) {
    const ThreadId t = opts_.schedule[cursor_++];
    if (t < n && !done_[t]) return t;
  }
  std::vector<ThreadId> runnable;
  for (ThreadId t = 0; t < n; ++t) {
    if (!done_[t]) runnable.push_back(t);
  }
  if (opts_.seed) return runnable[rng_() % runnable.size()];
  for (std::size_t k = 1; k <= n; ++k) {
    const ThreadId t = static_cast<ThreadId>((from + k) % n);
    if (!done_[t]) return t;
  }
  return from;
}

void Scheduler::wait_turn(std::unique_lock<std::mutex>& lk, ThreadId t) {
  cv_.wait(lk, [&] { return current_ == static_cast<int>(t) || stopping_; });
  if (stopping_) throw Stopped{};
}

void Scheduler::yield(ThreadId t) {
  std::unique_lock lk(mu_);
  if (stopping_) throw Stopped{};
  if (++steps_ > opts_.max_steps) throw Error("schedule exceeded " + std::to_string(opts_.max_steps) + " steps");
  const ThreadId next = pick(t);
  realized_.push_back(next);
  current_ = static_cast<int>(next);
  if (next != t) {
    cv_.notify_all();
    wait_turn(lk, t);
  }
}

void Scheduler::finish(ThreadId t) {
  std::lock_guard lk(mu_);
  done_[t] = true;
  bool any = false;
  for (bool d : done_) any |= !d;
  if (any && !stopping_) {
    const ThreadId next = pick(t);
    realized_.push_back(next);
    current_ = static_cast<int>(next);
  } else {
    current_ = -1;
  }
  cv_.notify_all();
}

void Scheduler::run(std::size_t threads, const std::function<void(ThreadId)>& worker) {
  done_.assign(threads, false);
  realized_.clear();
  cursor_ = 0;
  steps_ = 0;
  stopping_ = false;
  error_ = nullptr;
  if (threads == 0) return;
  {
    std::lock_guard lk(mu_);
    const ThreadId first = pick(static_cast<ThreadId>(threads - 1));
    realized_.push_back(first);
    current_ = static_cast<int>(first);
  }
  std::vector<std::thread> pool;
  for (ThreadId t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        {
          std::unique_lock lk(mu_);
          wait_turn(lk, t);
        }
        worker(t);
      } catch (const Stopped&) {
      } catch (...) {
        std::lock_guard lk(mu_);
        if (!error_) error_ = std::current_exception();
        stopping_ = true;
      }
      finish(t);
    });
  }
  for (auto& th : pool) th.join();
  if (error_) std::rethrow_exception(error_);
}

}  // namespace pmtx::check
