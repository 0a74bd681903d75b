#pragma once

#include <cstdint>
#include <span>

namespace dil {

// Fraction of positions where the predicted user equals the true user.
// Throws invalid_argument on empty input or length mismatch.
double accuracy(std::span<const std::uint32_t> truth, std::span<const std::uint32_t> pred);

}  // namespace dil
