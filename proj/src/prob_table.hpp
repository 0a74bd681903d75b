#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dil {

// Dense row-major table of probabilities.
class ProbTable {
 public:
  ProbTable() = default;
  ProbTable(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  const std::vector<double>& data() const { return data_; }

  bool operator==(const ProbTable&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Row sums to 1 within tol and all entries are finite and non-negative.
bool is_probability_row(std::span<const double> row, double tol = 1e-12);
bool is_row_stochastic(const ProbTable& table, double tol = 1e-12);

}  // namespace dil
