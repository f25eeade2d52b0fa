#pragma once

#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

#include "platoon/env.h"

namespace platoon {

/// One experience entry (S, u, r, S').
struct Transition {
  FollowerObservation state;
  double action = 0.0;
  double reward = 0.0;
  FollowerObservation next_state;
  int step = 0;           // time step k at which the transition was taken
  bool terminal = false;  // no bootstrap from next_state
};

/// Bounded FIFO experience store. Once full, each Store overwrites the oldest
/// entry. Sampling is uniform with replacement.
template <typename Entry = Transition>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
    entries_.reserve(std::min<size_t>(capacity, 4096));
  }

  void Store(Entry entry) {
    if (entries_.size() < capacity_) {
      entries_.push_back(std::move(entry));
      return;
    }
    entries_[head_] = std::move(entry);
    head_ = (head_ + 1) % capacity_;
  }

  size_t size() const { return entries_.size(); }
  size_t capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }

  /// i-th entry in insertion order, 0 being the oldest retained.
  const Entry& at(size_t i) const { return entries_.at((head_ + i) % entries_.size()); }

  /// Indices (into insertion order) of `n` draws.
  std::vector<size_t> SampleIndices(size_t n, std::mt19937_64& rng) const {
    if (entries_.empty()) throw std::logic_error("ReplayBuffer: cannot sample from an empty buffer");
    std::uniform_int_distribution<size_t> pick(0, entries_.size() - 1);
    std::vector<size_t> out(n);
    for (auto& i : out) i = pick(rng);
    return out;
  }

  std::vector<const Entry*> Sample(size_t n, std::mt19937_64& rng) const {
    std::vector<const Entry*> out;
    out.reserve(n);
    for (size_t i : SampleIndices(n, rng)) out.push_back(&at(i));
    return out;
  }

 private:
  size_t capacity_;
  size_t head_ = 0;  // oldest entry once the buffer is full
  std::vector<Entry> entries_;
};

/// Discrete Ornstein-Uhlenbeck exploration noise with zero mean:
/// x <- x - theta * x + sigma * xi.
class OuNoise {
 public:
  OuNoise(double theta, double sigma);

  double Step(std::mt19937_64& rng);
  /// Deterministic update with a given standard normal draw.
  double Step(double standard_normal);
  void Reset() { state_ = 0.0; }

  double state() const { return state_; }
  void set_state(double s) { state_ = s; }
  double theta() const { return theta_; }
  double sigma() const { return sigma_; }

 private:
  double theta_;
  double sigma_;
  double state_ = 0.0;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace platoon
