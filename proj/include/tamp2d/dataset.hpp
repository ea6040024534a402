#ifndef TAMP2D_DATASET_HPP_
#define TAMP2D_DATASET_HPP_

#include <array>
#include <deque>
#include <memory>
#include <mutex>
#include <vector>

#include "tamp2d/policy.hpp"

namespace tamp2d {

enum class SourceTag : std::uint8_t { kBase, kExploration };

// One successfully refined action segment, kept alive behind the motion
// records it produced so integrity checks can re-verify the constraints.
struct RefinedSegment {
  WorldState x_start;
  GroundAction action;
  Trajectory raw;      // optimizer output at the schema horizon
  Trajectory retimed;  // executed / supervised form
};

// Per-timestep control supervision for pi_lo (and the flat baseline).
struct MotionRecord {
  std::vector<double> lo_input;   // attention + lidar + schema one-hot
  std::vector<double> flat_obs;   // full observation vector
  std::array<double, 4> control{};
  std::shared_ptr<const RefinedSegment> segment;
};

// A fully refined, goal-reaching plan kept behind its task records.
struct PlanEpisode {
  WorldState x0;
  std::vector<GroundAction> actions;
  std::vector<Trajectory> segments;
  Goal goal;
};

// Per-timestep action supervision for pi_hi.
struct TaskRecord {
  std::vector<double> obs;
  int type = 0;
  int obj = 0;
  int targ = 0;
  std::shared_ptr<const PlanEpisode> episode;
};

// Invalid high-level proposals collected by the exploration node.
struct NegativeRecord {
  std::vector<double> obs;
  int type = 0;
  int obj = 0;
  int targ = 0;
};

// Bounded FIFO ring with per-source partitions so sampling can honor the
// configured base/exploration mix. Appends and samples are linearizable.
template <class T>
class Dataset {
 public:
  explicit Dataset(std::size_t capacity) : capacity_(capacity) {}

  void append(T record, SourceTag source) {
    std::lock_guard lock(mu_);
    auto& ring = source == SourceTag::kBase ? base_ : exploration_;
    ring.push_back(std::move(record));
    ++total_appended_;
    // Capacity is shared between the partitions; evict the older overall by
    // trimming whichever is larger first.
    while (base_.size() + exploration_.size() > capacity_) {
      if (base_.size() >= exploration_.size())
        base_.pop_front();
      else
        exploration_.pop_front();
    }
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return base_.size() + exploration_.size();
  }
  std::size_t size(SourceTag source) const {
    std::lock_guard lock(mu_);
    return source == SourceTag::kBase ? base_.size() : exploration_.size();
  }
  std::uint64_t total_appended() const {
    std::lock_guard lock(mu_);
    return total_appended_;
  }

  // Uniform sample honoring base_fraction when both sources are populated;
  // falls back to whichever source has data otherwise.
  std::vector<T> sample(Rng& rng, std::size_t n,
                        double base_fraction = 0.5) const {
    std::lock_guard lock(mu_);
    std::vector<T> out;
    if (base_.empty() && exploration_.empty()) return out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const bool from_base =
          exploration_.empty() ||
          (!base_.empty() && rng.uniform() < base_fraction);
      const auto& ring = from_base ? base_ : exploration_;
      out.push_back(ring[rng.uniform_int(static_cast<int>(ring.size()))]);
    }
    return out;
  }

  std::vector<T> snapshot() const {
    std::lock_guard lock(mu_);
    std::vector<T> out(base_.begin(), base_.end());
    out.insert(out.end(), exploration_.begin(), exploration_.end());
    return out;
  }

 private:
  mutable std::mutex mu_;
  std::deque<T> base_;
  std::deque<T> exploration_;
  std::size_t capacity_;
  std::uint64_t total_appended_ = 0;
};

}  // namespace tamp2d

#endif  // TAMP2D_DATASET_HPP_
