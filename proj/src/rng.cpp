#include "rng.hpp"

#include <cmath>

#include "prob_table.hpp"

namespace dil {

std::size_t Rng::sample(std::span<const double> weights) {
  const double u = uniform();
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    cum += weights[i];
    last_positive = i;
    if (u < cum) return i;
  }
  // Rounding left the cumulative sum just below u.
  return last_positive;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index) {
  return mix64(mix64(mix64(master) ^ tag) ^ index);
}

bool is_probability_row(std::span<const double> row, double tol) {
  double sum = 0.0;
  for (double p : row) {
    if (!std::isfinite(p) || p < 0.0) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= tol;
}

bool is_row_stochastic(const ProbTable& table, double tol) {
  for (std::size_t r = 0; r < table.rows(); ++r) {
    if (!is_probability_row(table.row(r), tol)) return false;
  }
  return true;
}

}  // namespace dil
