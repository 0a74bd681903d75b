#include "ahmm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "error.hpp"

namespace dil {

namespace {

double safe_log(double p) { return p > 0.0 ? std::log(p) : kLogZero; }

}  // namespace

std::size_t augmented_state_count(const ScenarioDims& dims) {
  constexpr std::size_t kMax = std::numeric_limits<std::size_t>::max();
  const std::size_t lumps = static_cast<std::size_t>(dims.n) * dims.q;
  std::size_t count = dims.m;
  for (std::uint32_t k = 0; k < dims.m; ++k) {
    if (lumps != 0 && count > kMax / lumps) return kMax;
    count *= lumps;
  }
  return count;
}

AugmentedHmm::AugmentedHmm(std::vector<UserModel> models, TurnScheduler sched, std::size_t limit)
    : models_(std::move(models)), sched_(std::move(sched)) {
  if (models_.empty() || models_.size() != sched_.users()) {
    throw Error(ErrorCode::invalid_argument, "need one user model per scheduler user");
  }
  dims_ = {static_cast<std::uint32_t>(models_.size()), models_[0].pages(),
           models_[0].max_duration()};
  for (const auto& model : models_) validate_model(model, dims_.n, dims_.q);

  state_count_ = augmented_state_count(dims_);
  if (state_count_ > limit) {
    throw Error(ErrorCode::state_overflow,
                "augmented state space m*(n*q)^m exceeds limit " + std::to_string(limit));
  }

  const std::uint32_t m = dims_.m, n = dims_.n, q = dims_.q;
  lump_count_ = static_cast<std::size_t>(n) * q;
  stride_.resize(m);
  std::size_t stride = m;
  for (std::uint32_t k = 0; k < m; ++k) {
    stride_[k] = stride;
    stride *= lump_count_;
  }

  log_transition_.resize(m);
  log_duration_.resize(m);
  for (std::uint32_t u = 0; u < m; ++u) {
    for (double p : models_[u].transition.data()) log_transition_[u].push_back(safe_log(p));
    for (double p : models_[u].duration_dist.data()) log_duration_[u].push_back(safe_log(p));
  }
  log_turn_.resize(static_cast<std::size_t>(m) * m);
  for (std::uint32_t i = 0; i < m; ++i) {
    for (std::uint32_t j = 0; j < m; ++j) log_turn_[i * m + j] = safe_log(sched_.turn_prob(i, j));
  }

  // Per-user initial lump law: uniform page times the page's duration law.
  std::vector<std::vector<double>> log_lump_init(m, std::vector<double>(lump_count_));
  const double log_page = -std::log(static_cast<double>(n));
  for (std::uint32_t u = 0; u < m; ++u) {
    for (std::size_t l = 0; l < lump_count_; ++l) {
      log_lump_init[u][l] = log_page + log_duration_[u][l];
    }
  }
  std::vector<double> log_first_turn(m);
  for (std::uint32_t u = 0; u < m; ++u) log_first_turn[u] = safe_log(sched_.initial()[u]);

  log_initial_.resize(state_count_);
  log_emission_.resize(state_count_ * n);
  for (std::size_t s = 0; s < state_count_; ++s) {
    const std::uint32_t active = active_user(s);
    double lp = log_first_turn[active];
    std::uint32_t active_page = 0;
    for (std::uint32_t k = 0; k < m; ++k) {
      const std::size_t lump = (s / stride_[k]) % lump_count_;
      lp += log_lump_init[k][lump];
      if (k == active) active_page = static_cast<std::uint32_t>(lump / q);
    }
    log_initial_[s] = lp;
    const auto out = models_[active].output.row(active_page);
    for (std::uint32_t r = 0; r < n; ++r) log_emission_[s * n + r] = safe_log(out[r]);
  }
}

std::size_t AugmentedHmm::encode(const AugmentedState& s) const {
  if (s.users.size() != dims_.m || s.active_user >= dims_.m) {
    throw Error(ErrorCode::invalid_argument, "augmented state has wrong arity");
  }
  std::size_t index = s.active_user;
  for (std::uint32_t k = 0; k < dims_.m; ++k) {
    const auto& us = s.users[k];
    if (us.page.index >= dims_.n || us.duration.remaining < 1 || us.duration.remaining > dims_.q) {
      throw Error(ErrorCode::invalid_argument, "user state out of range");
    }
    index += lump_index(us.page.index, us.duration.remaining) * stride_[k];
  }
  return index;
}

AugmentedState AugmentedHmm::decode(std::size_t index) const {
  AugmentedState s;
  s.active_user = active_user(index);
  s.users.reserve(dims_.m);
  for (std::uint32_t k = 0; k < dims_.m; ++k) {
    const std::size_t lump = (index / stride_[k]) % lump_count_;
    s.users.push_back({PageId{static_cast<std::uint32_t>(lump / dims_.q)},
                       Duration{static_cast<std::uint32_t>(lump % dims_.q) + 1}});
  }
  return s;
}

double AugmentedHmm::log_transition(std::size_t from, std::size_t to) const {
  const std::uint32_t emitter = active_user(from);
  const std::uint32_t next = active_user(to);
  for (std::uint32_t k = 0; k < dims_.m; ++k) {
    if (k == emitter) continue;
    if ((from / stride_[k]) % lump_count_ != (to / stride_[k]) % lump_count_) return kLogZero;
  }
  const double turn = log_turn_[static_cast<std::size_t>(emitter) * dims_.m + next];
  if (turn == kLogZero) return kLogZero;

  const std::size_t lump_from = (from / stride_[emitter]) % lump_count_;
  const std::size_t lump_to = (to / stride_[emitter]) % lump_count_;
  const auto page = static_cast<std::uint32_t>(lump_from / dims_.q);
  const auto duration = static_cast<std::uint32_t>(lump_from % dims_.q) + 1;
  const auto new_page = static_cast<std::uint32_t>(lump_to / dims_.q);
  const auto new_duration = static_cast<std::uint32_t>(lump_to % dims_.q) + 1;
  if (duration > 1) {
    if (new_page != page || new_duration != duration - 1) return kLogZero;
    return 0.0 + turn;
  }
  const double move = log_user_move(emitter, page, new_page, new_duration);
  if (move == kLogZero) return kLogZero;
  return move + turn;
}

AugmentedHmm build_ahmm(std::span<const UserModel> models, const TurnScheduler& sched,
                        std::size_t limit) {
  return AugmentedHmm(std::vector<UserModel>(models.begin(), models.end()), sched, limit);
}

double log_add(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

namespace {

void check_observations(const AugmentedHmm& hmm, std::span<const std::uint32_t> obs) {
  if (obs.empty()) throw Error(ErrorCode::invalid_argument, "observation sequence is empty");
  for (std::uint32_t o : obs) {
    if (o >= hmm.dims().n) {
      throw Error(ErrorCode::invalid_argument, "observation " + std::to_string(o) + " out of range");
    }
  }
}

}  // namespace

ViterbiResult viterbi(const AugmentedHmm& hmm, std::span<const std::uint32_t> obs) {
  check_observations(hmm, obs);
  const std::size_t S = hmm.state_count();
  const std::size_t T = obs.size();

  std::vector<double> score(S), next(S);
  std::vector<std::uint32_t> back((T - 1) * S);
  for (std::size_t s = 0; s < S; ++s) score[s] = hmm.log_initial(s) + hmm.log_emission(s, obs[0]);

  for (std::size_t t = 1; t < T; ++t) {
    std::fill(next.begin(), next.end(), kLogZero);
    std::uint32_t* bp = back.data() + (t - 1) * S;
    for (std::size_t s = 0; s < S; ++s) {
      const double base = score[s];
      if (base == kLogZero) continue;
      hmm.for_each_successor(s, [&](std::size_t to, double lp) {
        const double cand = base + lp;
        // Strict comparison: sources are visited in ascending order, so the
        // lowest-index predecessor wins ties.
        if (cand > next[to]) {
          next[to] = cand;
          bp[to] = static_cast<std::uint32_t>(s);
        }
      });
    }
    for (std::size_t s = 0; s < S; ++s) {
      if (next[s] != kLogZero) next[s] = next[s] + hmm.log_emission(s, obs[t]);
    }
    score.swap(next);
  }

  std::size_t best = 0;
  for (std::size_t s = 1; s < S; ++s) {
    if (score[s] > score[best]) best = s;
  }
  if (score[best] == kLogZero) {
    throw Error(ErrorCode::zero_probability, "observation sequence has zero probability under the model");
  }

  ViterbiResult result;
  result.log_prob = score[best];
  result.states.resize(T);
  result.states[T - 1] = best;
  for (std::size_t t = T - 1; t > 0; --t) {
    result.states[t - 1] = back[(t - 1) * S + result.states[t]];
  }
  result.users.reserve(T);
  for (std::size_t s : result.states) result.users.push_back(hmm.active_user(s));
  return result;
}

double forward_loglik(const AugmentedHmm& hmm, std::span<const std::uint32_t> obs) {
  check_observations(hmm, obs);
  const std::size_t S = hmm.state_count();
  std::vector<double> alpha(S), next(S);
  for (std::size_t s = 0; s < S; ++s) alpha[s] = hmm.log_initial(s) + hmm.log_emission(s, obs[0]);
  for (std::size_t t = 1; t < obs.size(); ++t) {
    std::fill(next.begin(), next.end(), kLogZero);
    for (std::size_t s = 0; s < S; ++s) {
      const double base = alpha[s];
      if (base == kLogZero) continue;
      hmm.for_each_successor(s, [&](std::size_t to, double lp) { next[to] = log_add(next[to], base + lp); });
    }
    for (std::size_t s = 0; s < S; ++s) {
      if (next[s] != kLogZero) next[s] += hmm.log_emission(s, obs[t]);
    }
    alpha.swap(next);
  }
  double total = kLogZero;
  for (double a : alpha) total = log_add(total, a);
  return total;
}

}  // namespace dil
