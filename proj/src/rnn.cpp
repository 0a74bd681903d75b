#include "rnn.hpp"

#include <cmath>
#include <string>

#include "error.hpp"
#include "metrics.hpp"

namespace dil {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

template <class Fn>
void for_each_tensor(RnnParams& p, Fn&& fn) {
  fn(p.wx.data(), p.wx.rows(), p.wx.cols());
  fn(p.wh.data(), p.wh.rows(), p.wh.cols());
  fn(p.b.data(), p.b.rows(), Eigen::Index{1});
  fn(p.wu.data(), p.wu.rows(), p.wu.cols());
}

template <class Fn>
void for_each_tensor(const RnnParams& p, Fn&& fn) {
  fn(p.wx.data(), p.wx.rows(), p.wx.cols());
  fn(p.wh.data(), p.wh.rows(), p.wh.cols());
  fn(p.b.data(), p.b.rows(), Eigen::Index{1});
  fn(p.wu.data(), p.wu.rows(), p.wu.cols());
}

}  // namespace

void validate_config(const RnnConfig& c) {
  if (c.hidden_size == 0 || c.input_size == 0 || c.output_size == 0 || c.bptt_window == 0) {
    throw Error(ErrorCode::invalid_argument, "rnn sizes and window must be positive");
  }
  if (!(c.beta1 > 0.0 && c.beta1 < 1.0 && c.beta2 > 0.0 && c.beta2 < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "adam betas must lie in (0, 1)");
  }
  if (!(c.learning_rate > 0.0) || !(c.epsilon > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "learning rate and epsilon must be positive");
  }
}

RnnParams zero_params(const RnnConfig& c) {
  const Eigen::Index gh = static_cast<Eigen::Index>(c.gate_count()) * c.hidden_size;
  RnnParams p;
  p.wx = Eigen::MatrixXd::Zero(gh, c.input_size);
  p.wh = Eigen::MatrixXd::Zero(gh, c.hidden_size);
  p.b = Eigen::VectorXd::Zero(gh);
  p.wu = Eigen::MatrixXd::Zero(c.output_size, c.hidden_size);
  return p;
}

RnnParams init_params(const RnnConfig& c, Rng& rng) {
  validate_config(c);
  RnnParams p = zero_params(c);
  for_each_tensor(p, [&](double* data, Eigen::Index rows, Eigen::Index cols) {
    for (Eigen::Index i = 0; i < rows * cols; ++i) data[i] = rng.uniform(-c.init_scale, c.init_scale);
  });
  if (c.cell == CellType::lstm) {
    p.b.segment(c.hidden_size, c.hidden_size).setConstant(c.forget_bias);
  }
  return p;
}

std::size_t parameter_count(const RnnParams& p) {
  return static_cast<std::size_t>(p.wx.size() + p.wh.size() + p.b.size() + p.wu.size());
}

std::vector<double> flatten(const RnnParams& p) {
  std::vector<double> flat;
  flat.reserve(parameter_count(p));
  for_each_tensor(p, [&](const double* data, Eigen::Index rows, Eigen::Index cols) {
    // Eigen storage is column-major; emit row-major.
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index col = 0; col < cols; ++col) flat.push_back(data[col * rows + r]);
    }
  });
  return flat;
}

void unflatten(std::span<const double> flat, RnnParams& p) {
  if (flat.size() != parameter_count(p)) {
    throw Error(ErrorCode::invalid_argument, "flat parameter vector has the wrong length");
  }
  std::size_t k = 0;
  for_each_tensor(p, [&](double* data, Eigen::Index rows, Eigen::Index cols) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index col = 0; col < cols; ++col) data[col * rows + r] = flat[k++];
    }
  });
}

Eigen::VectorXd one_hot(std::uint32_t index, std::uint32_t n) {
  if (index >= n) {
    throw Error(ErrorCode::invalid_argument,
                "one_hot: index " + std::to_string(index) + " >= " + std::to_string(n));
  }
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  v[index] = 1.0;
  return v;
}

RecurrentState zero_state(const RnnConfig& c) {
  return {Eigen::VectorXd::Zero(c.hidden_size), Eigen::VectorXd::Zero(c.hidden_size)};
}

ForwardResult forward(const RnnParams& params, const RnnConfig& config,
                      std::span<const std::uint32_t> inputs, const RecurrentState& h0) {
  const Eigen::Index H = config.hidden_size;
  const Eigen::Index T = static_cast<Eigen::Index>(inputs.size());
  const bool lstm = config.cell == CellType::lstm;

  ForwardResult out;
  ForwardCache& cache = out.cache;
  cache.cell = config.cell;
  cache.inputs.assign(inputs.begin(), inputs.end());
  cache.h.resize(H, T + 1);
  cache.h.col(0) = h0.h;
  cache.gates.resize(params.wx.rows(), T);
  if (lstm) {
    cache.c.resize(H, T + 1);
    cache.c.col(0) = h0.c;
    cache.tanh_c.resize(H, T);
  }

  Eigen::VectorXd z(params.wx.rows());
  for (Eigen::Index t = 0; t < T; ++t) {
    const std::uint32_t r = inputs[t];
    if (r >= params.wx.cols()) throw Error(ErrorCode::invalid_argument, "input request out of range");
    z.noalias() = params.wh * cache.h.col(t);
    z += params.wx.col(r) + params.b;
    if (!lstm) {
      cache.gates.col(t) = z.array().tanh();
      cache.h.col(t + 1) = cache.gates.col(t);
      continue;
    }
    auto g = cache.gates.col(t);
    for (Eigen::Index j = 0; j < 3 * H; ++j) g[j] = sigmoid(z[j]);
    g.segment(3 * H, H) = z.segment(3 * H, H).array().tanh();
    cache.c.col(t + 1) = g.segment(H, H).cwiseProduct(cache.c.col(t)) +
                         g.segment(0, H).cwiseProduct(g.segment(3 * H, H));
    cache.tanh_c.col(t) = cache.c.col(t + 1).array().tanh();
    cache.h.col(t + 1) = g.segment(2 * H, H).cwiseProduct(cache.tanh_c.col(t));
  }
  cache.logits.noalias() = params.wu * cache.h.rightCols(T);
  if (!cache.logits.allFinite()) {
    throw Error(ErrorCode::divergence, "non-finite activation in rnn forward pass");
  }
  out.logits = cache.logits;
  out.final_state.h = cache.h.col(T);
  out.final_state.c = lstm ? Eigen::VectorXd(cache.c.col(T)) : Eigen::VectorXd::Zero(H);
  return out;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

SoftmaxXent softmax_xent(const Eigen::VectorXd& logits, std::uint32_t label) {
  if (label >= logits.size()) throw Error(ErrorCode::invalid_argument, "label out of range");
  const double mx = logits.maxCoeff();
  const Eigen::ArrayXd shifted = logits.array() - mx;
  const double log_norm = std::log(shifted.exp().sum());
  SoftmaxXent out;
  out.loss = log_norm - shifted[label];
  out.grad = (shifted - log_norm).exp().matrix();
  out.grad[label] -= 1.0;
  return out;
}

Gradients backward(const RnnParams& params, const ForwardCache& cache,
                   std::span<const std::uint32_t> labels) {
  const Eigen::Index T = static_cast<Eigen::Index>(cache.inputs.size());
  if (static_cast<Eigen::Index>(labels.size()) != T) {
    throw Error(ErrorCode::invalid_argument, "labels and cached inputs differ in length");
  }
  Gradients out;
  Eigen::MatrixXd dlogits(params.wu.rows(), T);
  if (T > 0) {
    const double scale = 1.0 / static_cast<double>(T);
    double loss = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) {
      SoftmaxXent sx = softmax_xent(cache.logits.col(t), labels[t]);
      loss += sx.loss;
      dlogits.col(t) = sx.grad * scale;
    }
    out.loss = loss * scale;
  }
  out.grads = backprop(params, cache, dlogits);
  return out;
}

RnnParams backprop(const RnnParams& params, const ForwardCache& cache, const Eigen::MatrixXd& dlogits) {
  const Eigen::Index T = static_cast<Eigen::Index>(cache.inputs.size());
  const Eigen::Index H = params.wh.cols();
  const bool lstm = cache.cell == CellType::lstm;
  if (dlogits.cols() != T || dlogits.rows() != params.wu.rows()) {
    throw Error(ErrorCode::invalid_argument, "logit gradient has the wrong shape");
  }

  RnnParams g;
  g.wx = Eigen::MatrixXd::Zero(params.wx.rows(), params.wx.cols());
  g.b = Eigen::VectorXd::Zero(params.b.size());
  if (T == 0) {
    g.wh = Eigen::MatrixXd::Zero(params.wh.rows(), params.wh.cols());
    g.wu = Eigen::MatrixXd::Zero(params.wu.rows(), params.wu.cols());
    return g;
  }

  g.wu.noalias() = dlogits * cache.h.rightCols(T).transpose();
  Eigen::MatrixXd dh_out;
  dh_out.noalias() = params.wu.transpose() * dlogits;  // H x T

  Eigen::MatrixXd dz(params.wx.rows(), T);
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd dh(H), dc(H);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    dh = dh_out.col(t) + dh_next;
    auto gates = cache.gates.col(t);
    auto dzt = dz.col(t);
    if (!lstm) {
      dzt = dh.array() * (1.0 - gates.array().square());
    } else {
      const auto i = gates.segment(0, H).array();
      const auto f = gates.segment(H, H).array();
      const auto o = gates.segment(2 * H, H).array();
      const auto gg = gates.segment(3 * H, H).array();
      const auto tc = cache.tanh_c.col(t).array();
      dc = (dh.array() * o * (1.0 - tc.square())).matrix() + dc_next;
      dzt.segment(0, H) = (dc.array() * gg * i * (1.0 - i)).matrix();
      dzt.segment(H, H) = (dc.array() * cache.c.col(t).array() * f * (1.0 - f)).matrix();
      dzt.segment(2 * H, H) = (dh.array() * tc * o * (1.0 - o)).matrix();
      dzt.segment(3 * H, H) = (dc.array() * i * (1.0 - gg.square())).matrix();
      dc_next = (dc.array() * f).matrix();
    }
    dh_next.noalias() = params.wh.transpose() * dzt;
    g.wx.col(cache.inputs[t]) += dzt;
  }
  g.wh.noalias() = dz * cache.h.leftCols(T).transpose();
  g.b = dz.rowwise().sum();
  return g;
}

AdamState adam_init(const RnnParams& params) {
  AdamState s;
  s.first = params;
  s.first.wx.setZero();
  s.first.wh.setZero();
  s.first.b.setZero();
  s.first.wu.setZero();
  s.second = s.first;
  return s;
}

void adam_step(RnnParams& params, const RnnParams& grads, AdamState& state, const RnnConfig& config) {
  ++state.step;
  const double b1 = config.beta1, b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const double lr = config.learning_rate, eps = config.epsilon;
  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    if (p.rows() != g.rows() || p.cols() != g.cols()) {
      throw Error(ErrorCode::invalid_argument, "adam: gradient shape mismatch");
    }
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  update(params.wx, grads.wx, state.first.wx, state.second.wx);
  update(params.wh, grads.wh, state.first.wh, state.second.wh);
  update(params.b, grads.b, state.first.b, state.second.b);
  update(params.wu, grads.wu, state.first.wu, state.second.wu);
}

std::vector<std::uint32_t> predict_users(const RnnParams& params, const RnnConfig& config,
                                         std::span<const std::uint32_t> obs) {
  std::vector<std::uint32_t> out;
  out.reserve(obs.size());
  RecurrentState state = zero_state(config);
  constexpr std::size_t kChunk = 1024;
  for (std::size_t start = 0; start < obs.size(); start += kChunk) {
    const auto chunk = obs.subspan(start, std::min(kChunk, obs.size() - start));
    ForwardResult fr = forward(params, config, chunk, state);
    for (Eigen::Index t = 0; t < fr.logits.cols(); ++t) {
      Eigen::Index best = 0;
      // maxCoeff keeps the first maximum: ties go to the lower user index.
      fr.logits.col(t).maxCoeff(&best);
      out.push_back(static_cast<std::uint32_t>(best));
    }
    state = std::move(fr.final_state);
  }
  return out;
}

TrainResult train(const LabeledSequence& train_seq, const LabeledSequence& valid_seq,
                  const RnnConfig& config, Rng& rng) {
  validate_config(config);
  if (train_seq.size() == 0 || valid_seq.size() == 0) {
    throw Error(ErrorCode::invalid_argument, "training and validation sequences must be nonempty");
  }
  const auto inputs = train_seq.requests();
  const auto labels = train_seq.users();
  const auto valid_inputs = valid_seq.requests();
  const auto valid_labels = valid_seq.users();

  TrainResult result;
  RnnParams params = init_params(config, rng);
  AdamState adam = adam_init(params);
  result.params = params;
  result.best_valid_accuracy = -1.0;

  std::uint32_t since_best = 0;
  const std::size_t window = config.bptt_window;
  for (std::uint32_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    RecurrentState state = zero_state(config);
    double loss_sum = 0.0;
    std::size_t windows = 0;
    for (std::size_t start = 0; start < inputs.size(); start += window) {
      const std::size_t len = std::min(window, inputs.size() - start);
      const std::span<const std::uint32_t> in(inputs.data() + start, len);
      const std::span<const std::uint32_t> lab(labels.data() + start, len);
      ForwardResult fr;
      try {
        fr = forward(params, config, in, state);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::divergence) throw;
        throw Error(ErrorCode::divergence, "training diverged in epoch " + std::to_string(epoch));
      }
      Gradients gr = backward(params, fr.cache, lab);
      if (!std::isfinite(gr.loss)) {
        throw Error(ErrorCode::divergence, "non-finite loss in epoch " + std::to_string(epoch));
      }
      adam_step(params, gr.grads, adam, config);
      state = std::move(fr.final_state);
      loss_sum += gr.loss;
      ++windows;
    }
    const double valid_acc = accuracy(valid_labels, predict_users(params, config, valid_inputs));
    result.log.push_back({epoch, loss_sum / static_cast<double>(windows), valid_acc});
    if (valid_acc > result.best_valid_accuracy) {
      result.best_valid_accuracy = valid_acc;
      result.best_epoch = epoch;
      result.params = params;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

}  // namespace dil
