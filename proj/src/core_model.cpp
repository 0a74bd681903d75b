#include "core_model.hpp"

#include <string>

#include "error.hpp"

namespace dil {

namespace {

void require_stochastic(const ProbTable& table, std::size_t rows, std::size_t cols,
                        const char* name) {
  if (table.rows() != rows || table.cols() != cols) {
    throw Error(ErrorCode::malformed_model,
                std::string(name) + ": expected " + std::to_string(rows) + "x" +
                    std::to_string(cols) + ", got " + std::to_string(table.rows()) + "x" +
                    std::to_string(table.cols()));
  }
  for (std::size_t r = 0; r < rows; ++r) {
    if (!is_probability_row(table.row(r))) {
      throw Error(ErrorCode::malformed_model,
                  std::string(name) + ": row " + std::to_string(r) + " is not a probability vector");
    }
  }
}

}  // namespace

void validate_model(const UserModel& model, std::uint32_t n, std::uint32_t q) {
  if (n == 0 || q == 0) throw Error(ErrorCode::malformed_model, "dimensions must be positive");
  require_stochastic(model.transition, n, n, "transition");
  require_stochastic(model.duration_dist, n, q, "duration_dist");
  require_stochastic(model.output, n, n, "output");
}

UserState init_state(const UserModel& model, Rng& rng) {
  const auto page = static_cast<std::uint32_t>(rng.uniform_index(model.pages()));
  const auto d = static_cast<std::uint32_t>(rng.sample(model.duration_dist.row(page))) + 1;
  return {PageId{page}, Duration{d}};
}

StepResult user_step(const UserModel& model, const UserState& state, Rng& rng) {
  const std::uint32_t page = state.page.index;
  const auto request = static_cast<std::uint32_t>(rng.sample(model.output.row(page)));
  if (state.duration.remaining > 1) {
    return {{state.page, Duration{state.duration.remaining - 1}}, RequestId{request}};
  }
  const auto row = model.transition.row(page);
  bool any = false;
  for (double p : row) any = any || p > 0.0;
  if (!any) {
    throw Error(ErrorCode::malformed_model,
                "transition row " + std::to_string(page) + " is all zero");
  }
  const auto next_page = static_cast<std::uint32_t>(rng.sample(row));
  const auto d = static_cast<std::uint32_t>(rng.sample(model.duration_dist.row(next_page))) + 1;
  return {{PageId{next_page}, Duration{d}}, RequestId{request}};
}

}  // namespace dil
