#pragma once
// Central finite-difference check of the recurrent labeler's gradients.

#include <algorithm>
#include <cmath>
#include <vector>

#include "rnn.hpp"

namespace dil::testing {

inline double window_loss(const RnnParams& p, const RnnConfig& c, const std::vector<std::uint32_t>& in,
                          const std::vector<std::uint32_t>& labels, const RecurrentState& h0) {
  const auto fr = forward(p, c, in, h0);
  double loss = 0.0;
  for (Eigen::Index t = 0; t < fr.logits.cols(); ++t) loss += softmax_xent(fr.logits.col(t), labels[t]).loss;
  return loss / static_cast<double>(in.size());
}

// Largest relative error between analytic and central-difference gradients.
inline double max_gradient_error(CellType cell, std::uint32_t hidden, std::size_t T, Rng& rng) {
  const std::uint32_t n = 2 + static_cast<std::uint32_t>(rng.uniform_index(4));
  const std::uint32_t m = 2 + static_cast<std::uint32_t>(rng.uniform_index(2));
  RnnConfig c;
  c.cell = cell;
  c.hidden_size = hidden;
  c.input_size = n;
  c.output_size = m;
  c.init_scale = 0.5;
  RnnParams p = init_params(c, rng);
  std::vector<std::uint32_t> in(T), labels(T);
  for (auto& x : in) x = static_cast<std::uint32_t>(rng.uniform_index(n));
  for (auto& y : labels) y = static_cast<std::uint32_t>(rng.uniform_index(m));
  RecurrentState h0 = zero_state(c);
  for (Eigen::Index j = 0; j < h0.h.size(); ++j) {
    h0.h[j] = rng.uniform(-0.5, 0.5);
    h0.c[j] = rng.uniform(-0.5, 0.5);
  }
  const auto fr = forward(p, c, in, h0);
  const auto analytic = flatten(backward(p, fr.cache, labels).grads);
  auto flat = flatten(p);
  double worst = 0.0;
  const double step = 1e-5;
  for (std::size_t k = 0; k < flat.size(); ++k) {
    const double saved = flat[k];
    flat[k] = saved + step;
    unflatten(flat, p);
    const double up = window_loss(p, c, in, labels, h0);
    flat[k] = saved - step;
    unflatten(flat, p);
    const double down = window_loss(p, c, in, labels, h0);
    flat[k] = saved;
    unflatten(flat, p);
    const double numeric = (up - down) / (2 * step);
    const double denom = std::max({std::abs(numeric), std::abs(analytic[k]), 1e-6});
    worst = std::max(worst, std::abs(numeric - analytic[k]) / denom);
  }
  return worst;
}

}  // namespace dil::testing
