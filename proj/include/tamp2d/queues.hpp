#ifndef TAMP2D_QUEUES_HPP_
#define TAMP2D_QUEUES_HPP_

#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>
#include <set>

#include "tamp2d/problems.hpp"
#include "tamp2d/task_planner.hpp"

namespace tamp2d {

// Bounded priority queue of planning problems. Fewest unsatisfied goal
// conjuncts first, ties broken toward the most recently pushed. When full,
// the worst element is evicted. Push/pop are linearizable.
class TaskQueue {
 public:
  explicit TaskQueue(std::size_t capacity) : capacity_(capacity) {}

  void push(PlanningProblem p) {
    std::lock_guard lock(mu_);
    p.seq = ++seq_;
    items_.insert(std::move(p));
    if (items_.size() > capacity_) items_.erase(std::prev(items_.end()));
    cv_.notify_one();
  }

  std::optional<PlanningProblem> try_pop() {
    std::lock_guard lock(mu_);
    if (items_.empty()) return std::nullopt;
    PlanningProblem p = *items_.begin();
    items_.erase(items_.begin());
    return p;
  }

  bool empty() const {
    std::lock_guard lock(mu_);
    return items_.empty();
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return items_.size();
  }

 private:
  struct Better {
    bool operator()(const PlanningProblem& a, const PlanningProblem& b) const {
      if (a.priority != b.priority) return a.priority < b.priority;
      return a.seq > b.seq;
    }
  };

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::multiset<PlanningProblem, Better> items_;
  std::size_t capacity_;
  std::uint64_t seq_ = 0;
};

struct MotionWorkUnit {
  PlanningProblem problem;
  TaskPlan plan;
};

// Bounded FIFO of refinement work units; blocks producers when full in
// concurrent mode would complicate shutdown, so the oldest item is dropped
// instead (the task node regenerates work continuously).
class MotionQueue {
 public:
  explicit MotionQueue(std::size_t capacity) : capacity_(capacity) {}

  void push(MotionWorkUnit u) {
    std::lock_guard lock(mu_);
    items_.push_back(std::move(u));
    if (items_.size() > capacity_) items_.pop_front();
    cv_.notify_one();
  }

  std::optional<MotionWorkUnit> try_pop() {
    std::lock_guard lock(mu_);
    if (items_.empty()) return std::nullopt;
    MotionWorkUnit u = std::move(items_.front());
    items_.pop_front();
    return u;
  }

  // Blocks until an item arrives, the timeout passes, or close() is called.
  std::optional<MotionWorkUnit> pop_wait(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [this] { return !items_.empty() || closed_; });
    if (items_.empty()) return std::nullopt;
    MotionWorkUnit u = std::move(items_.front());
    items_.pop_front();
    return u;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    cv_.notify_all();
  }

  bool empty() const {
    std::lock_guard lock(mu_);
    return items_.empty();
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return items_.size();
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<MotionWorkUnit> items_;
  std::size_t capacity_;
  bool closed_ = false;
};

}  // namespace tamp2d

#endif  // TAMP2D_QUEUES_HPP_
