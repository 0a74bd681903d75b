#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "core_model.hpp"
#include "interleaver.hpp"

namespace dil {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// Hidden state of the augmented HMM: every user's (page, duration) plus the
// user that emits the current slot.
struct AugmentedState {
  std::vector<UserState> users;
  std::uint32_t active_user = 0;
  bool operator==(const AugmentedState&) const = default;
};

// Product HMM over m * (n*q)^m states.
//
// Canonical index: index = active_user + m * sum_k lump_k * (n*q)^k, with
// lump_k = page_k * q + (duration_k - 1).
//
// Slot semantics match the interleaver: the state at slot t holds the
// pre-step states, the active user emits from its page, and the transition to
// slot t+1 advances the user that emitted at t (Eq. (1) duration convention)
// before the next turn is drawn. Transitions are generated lazily from the
// factored form; emission and initial log-probabilities are stored densely.
class AugmentedHmm {
 public:
  AugmentedHmm(std::vector<UserModel> models, TurnScheduler sched, std::size_t limit);

  const ScenarioDims& dims() const { return dims_; }
  std::size_t state_count() const { return state_count_; }

  std::size_t encode(const AugmentedState& s) const;
  AugmentedState decode(std::size_t index) const;
  std::uint32_t active_user(std::size_t index) const {
    return static_cast<std::uint32_t>(index % dims_.m);
  }

  double log_initial(std::size_t s) const { return log_initial_[s]; }
  double log_emission(std::size_t s, std::uint32_t obs) const {
    return log_emission_[s * dims_.n + obs];
  }

  // Log-probability of moving from state `from` at slot t to `to` at t+1.
  double log_transition(std::size_t from, std::size_t to) const;

  // Calls fn(to, log_prob) for every successor with nonzero probability.
  template <class Fn>
  void for_each_successor(std::size_t from, Fn&& fn) const;

  const std::vector<UserModel>& models() const { return models_; }
  const TurnScheduler& scheduler() const { return sched_; }

 private:
  std::size_t lump_index(std::uint32_t page, std::uint32_t duration) const {
    return static_cast<std::size_t>(page) * dims_.q + (duration - 1);
  }

  // Active user's lumped transition; identical arithmetic in both the lazy
  // successor walk and log_transition so that path scores agree bit-for-bit.
  double log_user_move(std::uint32_t user, std::uint32_t page, std::uint32_t new_page,
                       std::uint32_t new_duration) const {
    return log_transition_[user][static_cast<std::size_t>(page) * dims_.n + new_page] +
           log_duration_[user][lump_index(new_page, new_duration)];
  }

  ScenarioDims dims_;
  std::vector<UserModel> models_;
  TurnScheduler sched_;
  std::size_t state_count_ = 0;
  std::size_t lump_count_ = 0;
  std::vector<std::size_t> stride_;  // (n*q)^k * m
  std::vector<std::vector<double>> log_transition_;  // per user n*n
  std::vector<std::vector<double>> log_duration_;    // per user n*q
  std::vector<double> log_turn_;                     // m*m (shares mode: repeated rows)
  std::vector<double> log_initial_;
  std::vector<double> log_emission_;
};

// Throws state_overflow when m*(n*q)^m exceeds limit.
AugmentedHmm build_ahmm(std::span<const UserModel> models, const TurnScheduler& sched,
                        std::size_t limit = 100'000);

// m * (n*q)^m, saturating at SIZE_MAX.
std::size_t augmented_state_count(const ScenarioDims& dims);

struct ViterbiResult {
  std::vector<std::size_t> states;
  std::vector<std::uint32_t> users;
  double log_prob = kLogZero;
};

// Most probable state path. Ties go to the lower canonical state index, both
// for the final state and for every back-pointer.
ViterbiResult viterbi(const AugmentedHmm& hmm, std::span<const std::uint32_t> obs);

// log sum over all paths of P(path, obs); -inf for impossible sequences.
double forward_loglik(const AugmentedHmm& hmm, std::span<const std::uint32_t> obs);

double log_add(double a, double b);

// ---------------------------------------------------------------------------

template <class Fn>
void AugmentedHmm::for_each_successor(std::size_t from, Fn&& fn) const {
  const std::uint32_t m = dims_.m;
  const std::uint32_t emitter = active_user(from);
  const std::size_t stride = stride_[emitter];
  const std::size_t lump = (from / stride) % lump_count_;
  const std::uint32_t page = static_cast<std::uint32_t>(lump / dims_.q);
  const std::uint32_t duration = static_cast<std::uint32_t>(lump % dims_.q) + 1;
  // Base index with the emitter's lump and the active user cleared.
  const std::size_t base = from - emitter - lump * stride;

  const double* turn = &log_turn_[static_cast<std::size_t>(emitter) * m];
  if (duration > 1) {
    const std::size_t moved = base + lump_index(page, duration - 1) * stride;
    for (std::uint32_t u = 0; u < m; ++u) {
      if (turn[u] == kLogZero) continue;
      fn(moved + u, 0.0 + turn[u]);
    }
    return;
  }
  for (std::uint32_t w = 0; w < dims_.n; ++w) {
    if (log_transition_[emitter][static_cast<std::size_t>(page) * dims_.n + w] == kLogZero) continue;
    for (std::uint32_t d = 1; d <= dims_.q; ++d) {
      const double move = log_user_move(emitter, page, w, d);
      if (move == kLogZero) continue;
      const std::size_t moved = base + lump_index(w, d) * stride;
      for (std::uint32_t u = 0; u < m; ++u) {
        if (turn[u] == kLogZero) continue;
        fn(moved + u, move + turn[u]);
      }
    }
  }
}

}  // namespace dil
