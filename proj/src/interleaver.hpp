#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "core_model.hpp"
#include "prob_table.hpp"
#include "rng.hpp"

namespace dil {

// Decides which user emits the next queue slot: either a time-invariant
// shares vector or a user-turn Markov matrix.
class TurnScheduler {
 public:
  enum class Mode { shares, matrix };

  static TurnScheduler from_shares(std::vector<double> shares);
  static TurnScheduler from_matrix(ProbTable turn_matrix);

  Mode mode() const { return mode_; }
  std::uint32_t users() const { return static_cast<std::uint32_t>(initial_.size()); }

  const std::vector<double>& shares() const { return shares_; }
  const ProbTable& turn_matrix() const { return matrix_; }

  // Law of the first slot: the shares vector, or the stationary law of A.
  const std::vector<double>& initial() const { return initial_; }

  // P(next = to | previous = from).
  double turn_prob(std::uint32_t from, std::uint32_t to) const {
    return mode_ == Mode::shares ? shares_[to] : matrix_(from, to);
  }
  std::span<const double> turn_row(std::uint32_t from) const {
    return mode_ == Mode::shares ? std::span<const double>(shares_) : matrix_.row(from);
  }

  bool operator==(const TurnScheduler& o) const {
    return mode_ == o.mode_ && shares_ == o.shares_ && matrix_ == o.matrix_;
  }

 private:
  Mode mode_ = Mode::shares;
  std::vector<double> shares_;
  ProbTable matrix_;
  std::vector<double> initial_;
};

// Stationary distribution of a row-stochastic matrix. Iterates the lazy chain
// (I + A) / 2, which shares A's stationary law and is aperiodic, until the L1
// change drops below tol.
std::vector<double> stationary_distribution(const ProbTable& a, double tol = 1e-12);

struct LabeledStep {
  std::uint32_t request = 0;
  std::uint32_t user = 0;
  std::uint32_t page = 0;      // pre-step page of the active user
  std::uint32_t duration = 0;  // pre-step remaining duration; 0 when withheld
  bool operator==(const LabeledStep&) const = default;
};

struct LabeledSequence {
  ScenarioDims dims;
  std::vector<LabeledStep> steps;
  bool hidden_known = true;  // page/duration columns are populated

  std::size_t size() const { return steps.size(); }
  std::vector<std::uint32_t> requests() const;
  std::vector<std::uint32_t> users() const;

  bool operator==(const LabeledSequence&) const = default;
};

std::uint32_t next_user(const TurnScheduler& sched, std::optional<std::uint32_t> prev, Rng& rng);

// Runs all users' HsMMs against one queue: per slot a single user is picked,
// emits, and advances; the others are stalled. Initial states are drawn for
// users 0..m-1 in order before the first slot.
LabeledSequence interleave(std::span<const UserModel> models, const TurnScheduler& sched,
                           std::size_t length, Rng& rng);

// Per-user request subsequences in queue order.
std::vector<std::vector<std::uint32_t>> split_by_user(const LabeledSequence& seq);

}  // namespace dil
