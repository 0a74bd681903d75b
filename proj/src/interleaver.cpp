#include "interleaver.hpp"

#include <cmath>
#include <string>

#include "error.hpp"

namespace dil {

TurnScheduler TurnScheduler::from_shares(std::vector<double> shares) {
  if (shares.empty() || !is_probability_row(shares)) {
    throw Error(ErrorCode::malformed_model, "shares vector must be a probability vector");
  }
  TurnScheduler s;
  s.mode_ = Mode::shares;
  s.initial_ = shares;
  s.shares_ = std::move(shares);
  return s;
}

TurnScheduler TurnScheduler::from_matrix(ProbTable turn_matrix) {
  if (turn_matrix.rows() == 0 || turn_matrix.rows() != turn_matrix.cols() ||
      !is_row_stochastic(turn_matrix)) {
    throw Error(ErrorCode::malformed_model, "turn matrix must be square and row-stochastic");
  }
  TurnScheduler s;
  s.mode_ = Mode::matrix;
  s.initial_ = stationary_distribution(turn_matrix);
  s.matrix_ = std::move(turn_matrix);
  return s;
}

std::vector<double> stationary_distribution(const ProbTable& a, double tol) {
  const std::size_t m = a.rows();
  std::vector<double> pi(m, 1.0 / static_cast<double>(m));
  std::vector<double> next(m);
  for (int iter = 0; iter < 1'000'000; ++iter) {
    for (std::size_t j = 0; j < m; ++j) next[j] = 0.5 * pi[j];
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) next[j] += 0.5 * pi[i] * a(i, j);
    }
    double sum = 0.0;
    for (double v : next) sum += v;
    double change = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      next[j] /= sum;
      change += std::abs(next[j] - pi[j]);
    }
    pi.swap(next);
    if (change < tol) break;
  }
  return pi;
}

std::vector<std::uint32_t> LabeledSequence::requests() const {
  std::vector<std::uint32_t> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.request);
  return out;
}

std::vector<std::uint32_t> LabeledSequence::users() const {
  std::vector<std::uint32_t> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.user);
  return out;
}

std::uint32_t next_user(const TurnScheduler& sched, std::optional<std::uint32_t> prev, Rng& rng) {
  if (!prev) return static_cast<std::uint32_t>(rng.sample(sched.initial()));
  return static_cast<std::uint32_t>(rng.sample(sched.turn_row(*prev)));
}

LabeledSequence interleave(std::span<const UserModel> models, const TurnScheduler& sched,
                           std::size_t length, Rng& rng) {
  if (models.empty() || models.size() != sched.users()) {
    throw Error(ErrorCode::invalid_argument, "need one user model per scheduler user");
  }
  const std::uint32_t n = models[0].pages();
  const std::uint32_t q = models[0].max_duration();
  for (const auto& model : models) validate_model(model, n, q);

  LabeledSequence seq;
  seq.dims = {static_cast<std::uint32_t>(models.size()), n, q};
  seq.steps.reserve(length);

  std::vector<UserState> states;
  states.reserve(models.size());
  for (const auto& model : models) states.push_back(init_state(model, rng));

  std::optional<std::uint32_t> prev;
  for (std::size_t t = 0; t < length; ++t) {
    const std::uint32_t u = next_user(sched, prev, rng);
    const UserState before = states[u];
    const StepResult step = user_step(models[u], before, rng);
    states[u] = step.next;
    seq.steps.push_back({step.request.index, u, before.page.index, before.duration.remaining});
    prev = u;
  }
  return seq;
}

std::vector<std::vector<std::uint32_t>> split_by_user(const LabeledSequence& seq) {
  std::vector<std::vector<std::uint32_t>> out(seq.dims.m);
  for (const auto& s : seq.steps) {
    if (s.user >= out.size()) {
      throw Error(ErrorCode::invalid_argument, "user label " + std::to_string(s.user) + " out of range");
    }
    out[s.user].push_back(s.request);
  }
  return out;
}

}  // namespace dil
