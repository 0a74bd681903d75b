#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "core_model.hpp"
#include "interleaver.hpp"
#include "rng.hpp"

namespace dil {

struct ScenarioParams {
  ScenarioDims dims;
  std::vector<UserModel> models;
  TurnScheduler sched;

  bool operator==(const ScenarioParams&) const = default;
};

// Throws malformed_model unless all models share dims and the scheduler has m users.
void validate_scenario(const ScenarioParams& params);

struct CaseSpec {
  int case_id = 1;  // 1..7
  std::uint32_t n = 20;
  std::uint32_t a = 10;  // block / support size
  std::uint32_t q = 5;
  TurnScheduler::Mode mode = TurnScheduler::Mode::shares;
};

// Beta(shape_a, shape_b) density evaluated at the midpoints (i - 0.5)/k of the
// support (taken in ascending column order), normalized; zero off-support.
std::vector<double> discretized_beta_row(std::span<const std::uint32_t> support, std::uint32_t n,
                                         double shape_a, double shape_b);

// a distinct uniformly chosen columns with weight 1/a each.
std::vector<double> gen_output_row(std::uint32_t n, std::uint32_t a, Rng& rng);

// Diagonal 0.5 + U/2; off-diagonals share the remainder in proportion to
// independent uniforms.
TurnScheduler gen_turn_matrix(std::uint32_t m, Rng& rng);

struct PageSupport {
  std::vector<std::uint32_t> main;
  std::vector<std::uint32_t> aux;  // cases 6-7 only: seldom-visited pages
};

// Column supports of both users' page-transition rows; the first random
// draws gen_case makes.
std::array<PageSupport, 2> draw_page_supports(const CaseSpec& spec, Rng& rng);

// Two-user scenario for one of the seven sparsity cases.
ScenarioParams gen_case(const CaseSpec& spec, Rng& rng);

// Two users, two pages, q = 2; user i stays on page i.
ScenarioParams gen_toy(Rng& rng);

// k distinct values from [0, n) in random order (partial Fisher-Yates).
std::vector<std::uint32_t> sample_without_replacement(std::uint32_t n, std::uint32_t k, Rng& rng);

}  // namespace dil
