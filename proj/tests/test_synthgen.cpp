#include <doctest.h>

#include <cmath>
#include <set>

#include "error.hpp"
#include "synthgen.hpp"

using namespace dil;

namespace {

std::set<std::uint32_t> column_support(const ProbTable& t) {
  std::set<std::uint32_t> cols;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) {
      if (t(r, c) > 0.0) cols.insert(static_cast<std::uint32_t>(c));
    }
  }
  return cols;
}

bool disjoint(const std::set<std::uint32_t>& a, const std::set<std::uint32_t>& b) {
  for (auto x : a) {
    if (b.count(x)) return false;
  }
  return true;
}

void check_scenario_rows(const ScenarioParams& p) {
  for (const auto& model : p.models) {
    CHECK(is_row_stochastic(model.transition));
    CHECK(is_row_stochastic(model.output));
    CHECK(is_row_stochastic(model.duration_dist));
  }
  if (p.sched.mode() == TurnScheduler::Mode::shares) {
    CHECK(is_probability_row(p.sched.shares()));
  } else {
    CHECK(is_row_stochastic(p.sched.turn_matrix()));
  }
}

}  // namespace

TEST_CASE("discretized_beta_row") {
  const std::uint32_t four[] = {3, 0, 7, 5};
  const auto uniform = discretized_beta_row(four, 8, 1.0, 1.0);
  for (auto c : four) CHECK(uniform[c] == doctest::Approx(0.25));
  CHECK(uniform[1] == 0.0);

  // Beta(3,1) density is proportional to x^2: 3*0.0625 vs 3*0.5625.
  const std::uint32_t two[] = {1, 0};
  const auto skew = discretized_beta_row(two, 2, 3.0, 1.0);
  CHECK(skew[0] == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(skew[1] == doctest::Approx(0.9).epsilon(1e-14));

  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const std::uint32_t k = 1 + static_cast<std::uint32_t>(rng.uniform_index(20));
    const auto support = sample_without_replacement(20, k, rng);
    const auto row = discretized_beta_row(support, 20, rng.uniform(0.1, 5), rng.uniform(0.1, 5));
    CHECK(is_probability_row(row));
  }
  CHECK_THROWS_AS(discretized_beta_row(std::span<const std::uint32_t>{}, 4, 1.0, 1.0), Error);
  CHECK_THROWS_AS(discretized_beta_row(two, 2, 0.0, 1.0), Error);
}

TEST_CASE("gen_output_row") {
  Rng rng(2);
  const auto full = gen_output_row(5, 5, rng);
  for (double p : full) CHECK(p == doctest::Approx(0.2));

  const auto row = gen_output_row(20, 10, rng);
  int nonzero = 0;
  for (double p : row) {
    if (p > 0.0) {
      ++nonzero;
      CHECK(p == 0.1);
    }
  }
  CHECK(nonzero == 10);
  CHECK_THROWS_AS(gen_output_row(3, 4, rng), Error);

  // Column marginal of a uniform 10-subset of 20 is 1/2.
  std::vector<int> hits(20, 0);
  for (int i = 0; i < 10000; ++i) {
    const auto r = gen_output_row(20, 10, rng);
    for (int c = 0; c < 20; ++c) hits[c] += r[c] > 0.0;
  }
  for (int c = 0; c < 20; ++c) CHECK(std::abs(hits[c] / 10000.0 - 0.5) < 0.02);
}

TEST_CASE("gen_turn_matrix") {
  Rng rng(3);
  const auto one = gen_turn_matrix(1, rng);
  CHECK(one.turn_matrix()(0, 0) == 1.0);
  for (int i = 0; i < 100; ++i) {
    const auto s = gen_turn_matrix(2 + static_cast<std::uint32_t>(i % 4), rng);
    const auto& a = s.turn_matrix();
    CHECK(is_row_stochastic(a));
    for (std::size_t r = 0; r < a.rows(); ++r) CHECK(a(r, r) >= 0.5);
  }
}

TEST_CASE("case 1 page and output blocks") {
  Rng rng(4);
  const auto p = gen_case({1, 20, 10, 5, TurnScheduler::Mode::shares}, rng);
  check_scenario_rows(p);
  for (std::uint32_t u = 0; u < 2; ++u) {
    const auto pages = column_support(p.models[u].transition);
    const auto outs = column_support(p.models[u].output);
    CHECK(*pages.begin() == 10 * u);
    CHECK(*pages.rbegin() == 10 * u + 9);
    CHECK(outs == pages);
    for (std::uint32_t d = 0; d < 5; ++d) CHECK(p.models[u].duration_dist(3, d) == doctest::Approx(0.2));
  }
  CHECK(p.sched.shares() == std::vector<double>{0.4, 0.6});
}

TEST_CASE("sparsity invariants of all cases") {
  Rng rng(5);
  for (int c = 1; c <= 7; ++c) {
    for (auto mode : {TurnScheduler::Mode::shares, TurnScheduler::Mode::matrix}) {
      const auto p = gen_case({c, 20, 10, 5, mode}, rng);
      check_scenario_rows(p);
      CHECK_NOTHROW(validate_scenario(p));
      const auto P0 = column_support(p.models[0].transition), P1 = column_support(p.models[1].transition);
      const auto O0 = column_support(p.models[0].output), O1 = column_support(p.models[1].output);
      if (c <= 3) CHECK(disjoint(P0, P1));
      if (c <= 2) CHECK(disjoint(O0, O1));
      if (c == 3 || c == 5 || c == 7) CHECK(p.models[0].output == p.models[1].output);
      if (c == 4 || c == 6) CHECK_FALSE(p.models[0].output == p.models[1].output);
      if (c == 4 || c == 5) {
        CHECK(P0.size() == 10);
        CHECK(P1.size() == 10);
      }
      if (c >= 6) {
        CHECK(P0.size() == 10);
        CHECK(P1.size() == 10);
      }
      for (std::size_t w = 0; w < 20; ++w) {
        int nz = 0;
        for (std::size_t r = 0; r < 20; ++r) nz += p.models[0].output(w, r) > 0.0;
        CHECK(nz == 10);
      }
    }
  }
}

TEST_CASE("case 6 main support size is uniform on 1..a") {
  Rng rng(6);
  const int draws = 1000;
  std::vector<int> counts(11, 0);
  const CaseSpec spec{6, 20, 10, 5, TurnScheduler::Mode::shares};
  for (int i = 0; i < draws; ++i) {
    const auto supports = draw_page_supports(spec, rng);
    for (const auto& s : supports) {
      CHECK(s.main.size() + s.aux.size() == 10);
      CHECK(!s.main.empty());
    }
    ++counts[supports[0].main.size()];
  }
  for (int s = 1; s <= 10; ++s) CHECK(std::abs(counts[s] / static_cast<double>(draws) - 0.1) < 0.03);
}

TEST_CASE("case 6 transition rows live on main plus auxiliary pages") {
  const CaseSpec spec{6, 20, 10, 5, TurnScheduler::Mode::shares};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng a(seed), b(seed);
    const auto supports = draw_page_supports(spec, a);
    const auto p = gen_case(spec, b);
    for (std::uint32_t u = 0; u < 2; ++u) {
      std::set<std::uint32_t> expected(supports[u].main.begin(), supports[u].main.end());
      expected.insert(supports[u].aux.begin(), supports[u].aux.end());
      CHECK(column_support(p.models[u].transition) == expected);
      // Main block carries 0.8 of every row when an auxiliary block exists.
      if (!supports[u].aux.empty()) {
        double main_mass = 0.0;
        for (auto c : supports[u].main) main_mass += p.models[u].transition(0, c);
        CHECK(main_mass == doctest::Approx(0.8).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("errors in case specs") {
  Rng rng(7);
  CHECK_THROWS_AS(gen_case({2, 20, 11, 5, TurnScheduler::Mode::shares}, rng), Error);
  CHECK_THROWS_AS(gen_case({1, 20, 11, 5, TurnScheduler::Mode::shares}, rng), Error);
  CHECK_THROWS_AS(gen_case({8, 20, 10, 5, TurnScheduler::Mode::shares}, rng), Error);
  CHECK_THROWS_AS(gen_case({4, 20, 21, 5, TurnScheduler::Mode::shares}, rng), Error);
}

TEST_CASE("gen_toy") {
  Rng rng(8);
  const auto p = gen_toy(rng);
  CHECK(p.dims == ScenarioDims{2, 2, 2});
  for (std::uint32_t u = 0; u < 2; ++u) {
    for (std::uint32_t w = 0; w < 2; ++w) {
      CHECK(p.models[u].transition(w, u) == 1.0);
      CHECK(p.models[u].output(w, 0) > 0.0);
      CHECK(p.models[u].output(w, 1) > 0.0);
      // Beta(3+eps, 1+delta) with eps, delta in [0,1]: mass on request 1 is
      // 3^(a-b) / (1 + 3^(a-b)) with a - b in [1, 3].
      CHECK(p.models[u].output(w, 1) >= 0.75 - 1e-12);
      CHECK(p.models[u].output(w, 1) <= 27.0 / 28.0 + 1e-12);
    }
  }
  CHECK(p.sched.shares() == std::vector<double>{0.4, 0.6});
  check_scenario_rows(p);
}

TEST_CASE("regeneration with the same seed is identical") {
  for (int c = 1; c <= 7; ++c) {
    Rng a(99), b(99);
    CHECK(gen_case({c, 20, 10, 5, TurnScheduler::Mode::matrix}, a) ==
          gen_case({c, 20, 10, 5, TurnScheduler::Mode::matrix}, b));
  }
  Rng a(5), b(5);
  CHECK(gen_toy(a) == gen_toy(b));
}
