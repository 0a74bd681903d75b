#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "interleaver.hpp"
#include "rng.hpp"

namespace dil {

enum class CellType { simple, lstm };

struct RnnConfig {
  CellType cell = CellType::lstm;
  std::uint32_t hidden_size = 64;
  std::uint32_t input_size = 0;   // n, one-hot width
  std::uint32_t output_size = 0;  // m, number of users
  std::uint32_t bptt_window = 50;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint32_t max_epochs = 50;
  std::uint32_t patience = 5;
  double init_scale = 0.08;
  double forget_bias = 1.0;

  std::uint32_t gate_count() const { return cell == CellType::lstm ? 4 : 1; }
};

void validate_config(const RnnConfig& config);

// Simple cell: h_t = tanh(wx v_t + wh h_{t-1} + b).
// LSTM: wx, wh and b stack the input, forget, output and candidate gates in
// that order (rows [0,H), [H,2H), [2H,3H), [3H,4H)).
// Both: logits u_t = wu h_t.
//
// Flat order (checkpoints, finite differences): wx, wh, b, wu, each row-major.
struct RnnParams {
  Eigen::MatrixXd wx;  // G*H x n
  Eigen::MatrixXd wh;  // G*H x H
  Eigen::VectorXd b;   // G*H
  Eigen::MatrixXd wu;  // m x H

  bool operator==(const RnnParams& o) const {
    return wx == o.wx && wh == o.wh && b == o.b && wu == o.wu;
  }
};

RnnParams zero_params(const RnnConfig& config);

// Uniform in [-init_scale, init_scale]; LSTM forget-gate bias set to forget_bias.
RnnParams init_params(const RnnConfig& config, Rng& rng);

std::size_t parameter_count(const RnnParams& params);
std::vector<double> flatten(const RnnParams& params);
void unflatten(std::span<const double> flat, RnnParams& params);

Eigen::VectorXd one_hot(std::uint32_t index, std::uint32_t n);

struct RecurrentState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;  // unused by the simple cell
};

RecurrentState zero_state(const RnnConfig& config);

struct ForwardCache {
  CellType cell = CellType::lstm;
  std::vector<std::uint32_t> inputs;
  Eigen::MatrixXd h;       // H x (T+1); column 0 is the incoming state
  Eigen::MatrixXd c;       // H x (T+1), LSTM only
  Eigen::MatrixXd gates;   // G*H x T, post-activation
  Eigen::MatrixXd tanh_c;  // H x T, LSTM only
  Eigen::MatrixXd logits;  // m x T
};

struct ForwardResult {
  Eigen::MatrixXd logits;  // m x T
  RecurrentState final_state;
  ForwardCache cache;
};

// Inputs are request indices; the one-hot product wx * v_t is a column lookup.
// Throws Error(divergence) on non-finite activations.
ForwardResult forward(const RnnParams& params, const RnnConfig& config,
                      std::span<const std::uint32_t> inputs, const RecurrentState& h0);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

struct SoftmaxXent {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

SoftmaxXent softmax_xent(const Eigen::VectorXd& logits, std::uint32_t label);

struct Gradients {
  RnnParams grads;
  double loss = 0.0;  // mean cross-entropy over the window
};

// Exact gradients of the mean per-step cross-entropy; no gradient flows into
// the incoming state.
Gradients backward(const RnnParams& params, const ForwardCache& cache,
                   std::span<const std::uint32_t> labels);

struct AdamState {
  RnnParams first;
  RnnParams second;
  std::uint64_t step = 0;
};

// Backpropagation from given logit gradients (m x T).
RnnParams backprop(const RnnParams& params, const ForwardCache& cache, const Eigen::MatrixXd& dlogits);

AdamState adam_init(const RnnParams& params);
void adam_step(RnnParams& params, const RnnParams& grads, AdamState& state, const RnnConfig& config);

std::vector<std::uint32_t> predict_users(const RnnParams& params, const RnnConfig& config,
                                         std::span<const std::uint32_t> obs);

struct EpochLog {
  std::uint32_t epoch = 0;
  double train_loss = 0.0;
  double valid_accuracy = 0.0;
};

struct TrainResult {
  RnnParams params;  // best validation accuracy
  std::vector<EpochLog> log;
  std::uint32_t best_epoch = 0;
  double best_valid_accuracy = 0.0;
};

// Truncated BPTT over consecutive windows of the training sequence; the
// hidden state is carried across windows and reset each epoch. Early stops
// after `patience` epochs without a validation improvement.
TrainResult train(const LabeledSequence& train_seq, const LabeledSequence& valid_seq,
                  const RnnConfig& config, Rng& rng);

}  // namespace dil
