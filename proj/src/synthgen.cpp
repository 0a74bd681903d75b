#include "synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "error.hpp"

namespace dil {

void validate_scenario(const ScenarioParams& params) {
  const auto& d = params.dims;
  if (d.m == 0 || d.n == 0 || d.q == 0) throw Error(ErrorCode::malformed_model, "dimensions must be positive");
  if (params.models.size() != d.m) throw Error(ErrorCode::malformed_model, "expected m user models");
  if (params.sched.users() != d.m) throw Error(ErrorCode::malformed_model, "scheduler size differs from m");
  for (const auto& model : params.models) validate_model(model, d.n, d.q);
}

std::vector<double> discretized_beta_row(std::span<const std::uint32_t> support, std::uint32_t n,
                                         double shape_a, double shape_b) {
  if (support.empty()) throw Error(ErrorCode::invalid_argument, "beta row needs a non-empty support");
  if (!(shape_a > 0.0) || !(shape_b > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "beta shape parameters must be positive");
  }
  std::vector<std::uint32_t> cols(support.begin(), support.end());
  std::sort(cols.begin(), cols.end());
  const double k = static_cast<double>(cols.size());
  std::vector<double> row(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] >= n) throw Error(ErrorCode::invalid_argument, "support column out of range");
    const double x = (static_cast<double>(i) + 0.5) / k;
    // Normalizing constant cancels.
    const double density = std::pow(x, shape_a - 1.0) * std::pow(1.0 - x, shape_b - 1.0);
    row[cols[i]] = density;
    total += density;
  }
  for (double& p : row) p /= total;
  return row;
}

std::vector<std::uint32_t> sample_without_replacement(std::uint32_t n, std::uint32_t k, Rng& rng) {
  if (k > n) throw Error(ErrorCode::invalid_argument, "cannot choose more columns than exist");
  std::vector<std::uint32_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0u);
  for (std::uint32_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.uniform_index(n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

namespace {

std::vector<double> uniform_row_on(std::span<const std::uint32_t> cols, std::uint32_t n) {
  std::vector<double> row(n, 0.0);
  const double w = 1.0 / static_cast<double>(cols.size());
  for (std::uint32_t c : cols) row[c] = w;
  return row;
}

// a columns drawn from `pool`, uniform weights.
std::vector<double> output_row_from_pool(std::span<const std::uint32_t> pool, std::uint32_t n,
                                         std::uint32_t a, Rng& rng) {
  const auto picks = sample_without_replacement(static_cast<std::uint32_t>(pool.size()), a, rng);
  std::vector<std::uint32_t> cols;
  cols.reserve(a);
  for (std::uint32_t i : picks) cols.push_back(pool[i]);
  return uniform_row_on(cols, n);
}

void set_row(ProbTable& table, std::size_t r, const std::vector<double>& row) {
  std::copy(row.begin(), row.end(), table.row(r).begin());
}

std::vector<std::uint32_t> range(std::uint32_t lo, std::uint32_t hi) {
  std::vector<std::uint32_t> v(hi - lo);
  std::iota(v.begin(), v.end(), lo);
  return v;
}

// Main-block Beta(3+eps, 1+delta) row with eps, delta ~ U[-1, 1].
std::vector<double> main_block_row(std::span<const std::uint32_t> support, std::uint32_t n, Rng& rng) {
  const double eps = rng.uniform(-1.0, 1.0);
  const double delta = rng.uniform(-1.0, 1.0);
  return discretized_beta_row(support, n, 3.0 + eps, 1.0 + delta);
}

constexpr double kMainMass = 0.8;

// Main block carries kMainMass, auxiliary block Beta(2+eps, 2+delta) the rest.
std::vector<double> main_aux_row(std::span<const std::uint32_t> main, std::span<const std::uint32_t> aux,
                                 std::uint32_t n, Rng& rng) {
  auto row = main_block_row(main, n, rng);
  if (aux.empty()) return row;
  const double eps = rng.uniform(-1.0, 1.0);
  const double delta = rng.uniform(-1.0, 1.0);
  const auto aux_row = discretized_beta_row(aux, n, 2.0 + eps, 2.0 + delta);
  double total = 0.0;
  for (std::uint32_t c = 0; c < n; ++c) {
    row[c] = kMainMass * row[c] + (1.0 - kMainMass) * aux_row[c];
    total += row[c];
  }
  for (double& p : row) p /= total;
  return row;
}

ProbTable uniform_durations(std::uint32_t n, std::uint32_t q) {
  return ProbTable(n, q, 1.0 / static_cast<double>(q));
}

}  // namespace

std::vector<double> gen_output_row(std::uint32_t n, std::uint32_t a, Rng& rng) {
  if (a == 0 || a > n) throw Error(ErrorCode::invalid_argument, "output support size must be in [1, n]");
  return uniform_row_on(sample_without_replacement(n, a, rng), n);
}

TurnScheduler gen_turn_matrix(std::uint32_t m, Rng& rng) {
  if (m == 0) throw Error(ErrorCode::invalid_argument, "need at least one user");
  ProbTable a(m, m);
  for (std::uint32_t i = 0; i < m; ++i) {
    const double diag = 0.5 + 0.5 * rng.uniform();
    if (m == 1) {
      a(i, i) = 1.0;
      continue;
    }
    std::vector<double> x(m, 0.0);
    double sx = 0.0;
    for (std::uint32_t j = 0; j < m; ++j) {
      if (j == i) continue;
      x[j] = rng.uniform();
      sx += x[j];
    }
    if (sx <= 0.0) {
      // All uniforms came out 0; spread evenly.
      for (std::uint32_t j = 0; j < m; ++j) x[j] = j == i ? 0.0 : 1.0;
      sx = m - 1;
    }
    for (std::uint32_t j = 0; j < m; ++j) a(i, j) = j == i ? diag : (1.0 - diag) * x[j] / sx;
    // Exact normalization of the rounded row.
    double s = 0.0;
    for (std::uint32_t j = 0; j < m; ++j) s += a(i, j);
    for (std::uint32_t j = 0; j < m; ++j) a(i, j) /= s;
  }
  return TurnScheduler::from_matrix(std::move(a));
}

std::array<PageSupport, 2> draw_page_supports(const CaseSpec& spec, Rng& rng) {
  const std::uint32_t n = spec.n, a = spec.a;
  std::array<PageSupport, 2> out;
  if (spec.case_id <= 3) {
    out[0].main = range(0, a);
    out[1].main = range(a, n);
  } else if (spec.case_id <= 5) {
    for (auto& s : out) s.main = sample_without_replacement(n, a, rng);
  } else {
    for (auto& s : out) {
      const auto size = static_cast<std::uint32_t>(1 + rng.uniform_index(a));
      const auto picks = sample_without_replacement(n, a, rng);
      s.main.assign(picks.begin(), picks.begin() + size);
      s.aux.assign(picks.begin() + size, picks.end());
    }
  }
  return out;
}

ScenarioParams gen_case(const CaseSpec& spec, Rng& rng) {
  const std::uint32_t n = spec.n, a = spec.a, q = spec.q;
  if (spec.case_id < 1 || spec.case_id > 7) throw Error(ErrorCode::invalid_argument, "case id must be in 1..7");
  if (n == 0 || q == 0 || a == 0 || a > n) throw Error(ErrorCode::invalid_argument, "need 1 <= a <= n and q >= 1");
  const int c = spec.case_id;
  if (c <= 3 && a >= n) {
    throw Error(ErrorCode::invalid_argument, "disjoint page blocks need a < n");
  }
  if (c == 2 && a > n / 2) {
    throw Error(ErrorCode::invalid_argument, "disjoint output supports need a <= n/2");
  }
  if (c == 1 && a > n - a) {
    throw Error(ErrorCode::invalid_argument, "case 1 outputs need a <= n - a");
  }

  ScenarioParams params;
  params.dims = {2, n, q};
  params.models.resize(2);
  for (auto& model : params.models) {
    model.transition = ProbTable(n, n);
    model.output = ProbTable(n, n);
    model.duration_dist = uniform_durations(n, q);
  }

  const auto supports = draw_page_supports(spec, rng);
  for (int u = 0; u < 2; ++u) {
    for (std::uint32_t w = 0; w < n; ++w) {
      set_row(params.models[u].transition, w, main_aux_row(supports[u].main, supports[u].aux, n, rng));
    }
  }

  // Output supports.
  if (c == 1) {
    for (int u = 0; u < 2; ++u) {
      for (std::uint32_t w = 0; w < n; ++w) {
        set_row(params.models[u].output, w, output_row_from_pool(supports[u].main, n, a, rng));
      }
    }
  } else if (c == 2) {
    auto perm = sample_without_replacement(n, n, rng);
    const std::uint32_t half = n / 2;
    std::vector<std::uint32_t> pool0(perm.begin(), perm.begin() + half);
    std::vector<std::uint32_t> pool1(perm.begin() + half, perm.begin() + 2 * half);
    for (std::uint32_t w = 0; w < n; ++w) set_row(params.models[0].output, w, output_row_from_pool(pool0, n, a, rng));
    for (std::uint32_t w = 0; w < n; ++w) set_row(params.models[1].output, w, output_row_from_pool(pool1, n, a, rng));
  } else if (c == 3 || c == 5 || c == 7) {
    for (std::uint32_t w = 0; w < n; ++w) set_row(params.models[0].output, w, gen_output_row(n, a, rng));
    params.models[1].output = params.models[0].output;
  } else {
    for (int u = 0; u < 2; ++u) {
      for (std::uint32_t w = 0; w < n; ++w) set_row(params.models[u].output, w, gen_output_row(n, a, rng));
    }
  }

  params.sched = spec.mode == TurnScheduler::Mode::shares ? TurnScheduler::from_shares({0.4, 0.6})
                                                          : gen_turn_matrix(2, rng);
  return params;
}

ScenarioParams gen_toy(Rng& rng) {
  ScenarioParams params;
  params.dims = {2, 2, 2};
  const std::uint32_t both[] = {0, 1};
  for (std::uint32_t u = 0; u < 2; ++u) {
    UserModel model;
    model.transition = ProbTable(2, 2);
    model.transition(0, u) = 1.0;
    model.transition(1, u) = 1.0;
    model.duration_dist = uniform_durations(2, 2);
    model.output = ProbTable(2, 2);
    for (std::uint32_t w = 0; w < 2; ++w) {
      const double eps = rng.uniform();
      const double delta = rng.uniform();
      set_row(model.output, w, discretized_beta_row(both, 2, 3.0 + eps, 1.0 + delta));
    }
    params.models.push_back(std::move(model));
  }
  params.sched = TurnScheduler::from_shares({0.4, 0.6});
  return params;
}

}  // namespace dil
