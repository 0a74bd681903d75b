#pragma once

#include <cstdint>
#include <utility>

#include "prob_table.hpp"
#include "rng.hpp"

namespace dil {

struct PageId {
  std::uint32_t index = 0;
  bool operator==(const PageId&) const = default;
};

struct RequestId {
  std::uint32_t index = 0;
  bool operator==(const RequestId&) const = default;
};

// Outstanding requests on the current page; always in [1, q].
struct Duration {
  std::uint32_t remaining = 1;
  bool operator==(const Duration&) const = default;
};

struct ScenarioDims {
  std::uint32_t m = 1;  // users
  std::uint32_t n = 1;  // pages (and request universe)
  std::uint32_t q = 1;  // max requests per page
  bool operator==(const ScenarioDims&) const = default;
};

// One user's hidden semi-Markov browsing model.
struct UserModel {
  ProbTable transition;     // n x n, page -> next page
  ProbTable duration_dist;  // n x q, column d-1 holds p_page(d)
  ProbTable output;         // n x n, page -> request

  std::uint32_t pages() const { return static_cast<std::uint32_t>(transition.rows()); }
  std::uint32_t max_duration() const { return static_cast<std::uint32_t>(duration_dist.cols()); }

  bool operator==(const UserModel&) const = default;
};

struct UserState {
  PageId page;
  Duration duration;
  bool operator==(const UserState&) const = default;
};

// Throws Error(malformed_model) unless shapes match (n, q) and every row is a
// probability vector within 1e-12.
void validate_model(const UserModel& model, std::uint32_t n, std::uint32_t q);

// Uniform page over [0, n), duration drawn from that page's duration law.
UserState init_state(const UserModel& model, Rng& rng);

struct StepResult {
  UserState next;
  RequestId request;
};

// Emits a request from the current page, then either decrements the duration
// or, on the page's last request, moves to a new page and redraws the duration.
StepResult user_step(const UserModel& model, const UserState& state, Rng& rng);

}  // namespace dil
