#pragma once

#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <random>
#include <vector>

#include "pmtx/interleaver.hpp"

namespace pmtx::check {

/// Runs worker threads one at a time, switching only at yield points.
///
/// Each yield consumes the next entry of the explicit schedule (entries that
/// name finished threads are skipped). Once the schedule is exhausted the
/// next thread is drawn from a seeded RNG if one is set, otherwise round
/// robin. The realized sequence of choices, fed back as an explicit
/// schedule, reproduces the run.
class Scheduler : public Interleaver {
 public:
  struct Options {
    std::vector<ThreadId> schedule;
    std::optional<std::uint64_t> seed;
    std::size_t max_steps = std::size_t{1} << 22;
  };

  explicit Scheduler(Options opts);

  /// Spawns `threads` workers and returns after all of them finish. The
  /// first exception raised by a worker is rethrown here.
  void run(std::size_t threads, const std::function<void(ThreadId)>& worker);

  void yield(ThreadId t) override;

  const std::vector<ThreadId>& realized() const { return realized_; }

 private:
  ThreadId pick(ThreadId from);
  void wait_turn(std::unique_lock<std::mutex>& lk, ThreadId t);
  void finish(ThreadId t);

  Options opts_;
  std::mt19937_64 rng_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<bool> done_;
  int current_ = -1;
  std::size_t cursor_ = 0;
  std::size_t steps_ = 0;
  bool stopping_ = false;
  std::vector<ThreadId> realized_;
  std::exception_ptr error_;
};

}  // namespace pmtx::check
