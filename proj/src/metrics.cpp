#include "metrics.hpp"

#include <string>

#include "error.hpp"

namespace dil {

double accuracy(std::span<const std::uint32_t> truth, std::span<const std::uint32_t> pred) {
  if (truth.size() != pred.size()) {
    throw Error(ErrorCode::invalid_argument, "accuracy: length mismatch (" + std::to_string(truth.size()) +
                                                 " vs " + std::to_string(pred.size()) + ")");
  }
  if (truth.empty()) throw Error(ErrorCode::invalid_argument, "accuracy: empty sequence");
  std::size_t hits = 0;
  for (std::size_t t = 0; t < truth.size(); ++t) hits += truth[t] == pred[t];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace dil
