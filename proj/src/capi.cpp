#include "deinterleave/deinterleave.h"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "ahmm.hpp"
#include "error.hpp"
#include "experiments.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "rnn.hpp"
#include "synthgen.hpp"

struct dil_scenario {
  dil::ScenarioParams params;
};

struct dil_dataset {
  dil::LabeledSequence seq;
};

struct dil_rnn {
  dil::Checkpoint ckpt;
};

namespace {

thread_local std::string g_last_error;

dil_status to_status(dil::ErrorCode code) {
  switch (code) {
    case dil::ErrorCode::invalid_argument: return DIL_ERR_INVALID_ARGUMENT;
    case dil::ErrorCode::malformed_model: return DIL_ERR_MALFORMED_MODEL;
    case dil::ErrorCode::state_overflow: return DIL_ERR_STATE_OVERFLOW;
    case dil::ErrorCode::zero_probability: return DIL_ERR_ZERO_PROBABILITY;
    case dil::ErrorCode::divergence: return DIL_ERR_DIVERGENCE;
    case dil::ErrorCode::parse_error: return DIL_ERR_PARSE;
    case dil::ErrorCode::io_error: return DIL_ERR_IO;
  }
  return DIL_ERR_INTERNAL;
}

template <class Fn>
dil_status guarded(Fn&& fn) {
  try {
    fn();
    return DIL_OK;
  } catch (const dil::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DIL_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return DIL_ERR_INTERNAL;
  }
}

void require(bool cond, const char* what) {
  if (!cond) throw dil::Error(dil::ErrorCode::invalid_argument, what);
}

dil::TurnScheduler::Mode to_mode(dil_turn_mode mode) {
  require(mode == DIL_TURN_SHARES || mode == DIL_TURN_MATRIX, "unknown turn mode");
  return mode == DIL_TURN_SHARES ? dil::TurnScheduler::Mode::shares : dil::TurnScheduler::Mode::matrix;
}

dil::RnnConfig to_config(const dil_rnn_config& c) {
  dil::RnnConfig r;
  require(c.cell == DIL_CELL_SIMPLE || c.cell == DIL_CELL_LSTM, "unknown cell type");
  r.cell = c.cell == DIL_CELL_LSTM ? dil::CellType::lstm : dil::CellType::simple;
  r.hidden_size = c.hidden_size;
  r.bptt_window = c.bptt_window;
  r.learning_rate = c.learning_rate;
  r.beta1 = c.beta1;
  r.beta2 = c.beta2;
  r.epsilon = c.epsilon;
  r.max_epochs = c.max_epochs;
  r.patience = c.patience;
  r.init_scale = c.init_scale;
  r.forget_bias = c.forget_bias;
  return r;
}

dil::ExperimentOptions to_options(const dil_experiment_options* o) {
  dil_experiment_options local;
  dil_experiment_options_default(&local);
  if (o) local = *o;
  dil::ExperimentOptions opts;
  if (local.realizations) opts.realizations = local.realizations;
  if (local.max_epochs) opts.rnn.max_epochs = local.max_epochs;
  opts.threads = local.threads;
  if (local.case_mask) {
    opts.cases.clear();
    for (int c = 1; c <= 7; ++c) {
      if (local.case_mask & (1u << (c - 1))) opts.cases.push_back(c);
    }
    require(!opts.cases.empty(), "case mask selects no case in 1..7");
  }
  if (local.verbose) opts.progress = [](const std::string& msg) { std::cerr << msg << std::endl; };
  return opts;
}

void write_report(const dil::ExperimentReport& report, const char* out_dir, bool timing) {
  require(out_dir != nullptr, "out_dir is null");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw dil::Error(dil::ErrorCode::io_error, "cannot create " + std::string(out_dir));
  const std::filesystem::path dir(out_dir);
  dil::write_json_file(dir / "report.json", dil::report_to_json(report, timing));
  dil::write_text_file(dir / "report.txt", dil::render_table(report));
}

std::size_t effective_limit(uint64_t limit) { return limit ? static_cast<std::size_t>(limit) : 100'000; }

}  // namespace

extern "C" {

const char* dil_version(void) { return "1.0.0"; }

const char* dil_last_error(void) { return g_last_error.c_str(); }

const char* dil_status_string(dil_status status) {
  switch (status) {
    case DIL_OK: return "ok";
    case DIL_ERR_INVALID_ARGUMENT: return "invalid argument";
    case DIL_ERR_MALFORMED_MODEL: return "malformed model";
    case DIL_ERR_STATE_OVERFLOW: return "state space too large";
    case DIL_ERR_ZERO_PROBABILITY: return "zero-probability observation sequence";
    case DIL_ERR_DIVERGENCE: return "training diverged";
    case DIL_ERR_PARSE: return "parse error";
    case DIL_ERR_IO: return "i/o error";
    case DIL_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

uint64_t dil_derive_seed(uint64_t master, uint64_t tag, uint64_t index) {
  return dil::derive_seed(master, tag, index);
}

dil_status dil_scenario_generate_case(int case_id, dil_turn_mode mode, uint32_t n, uint32_t a, uint32_t q,
                                      uint64_t seed, dil_scenario** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    dil::Rng rng(seed);
    auto params = dil::gen_case({case_id, n, a, q, to_mode(mode)}, rng);
    *out = new dil_scenario{std::move(params)};
  });
}

dil_status dil_scenario_generate_toy(uint64_t seed, dil_scenario** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    dil::Rng rng(seed);
    *out = new dil_scenario{dil::gen_toy(rng)};
  });
}

dil_status dil_scenario_load(const char* path, dil_scenario** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new dil_scenario{dil::scenario_from_json(dil::read_json_file(path))};
  });
}

dil_status dil_scenario_save(const dil_scenario* scenario, const char* path) {
  return guarded([&] {
    require(scenario && path, "null argument");
    dil::write_json_file(path, dil::scenario_to_json(scenario->params));
  });
}

dil_status dil_scenario_dims(const dil_scenario* scenario, uint32_t* m, uint32_t* n, uint32_t* q) {
  return guarded([&] {
    require(scenario != nullptr, "scenario is null");
    if (m) *m = scenario->params.dims.m;
    if (n) *n = scenario->params.dims.n;
    if (q) *q = scenario->params.dims.q;
  });
}

void dil_scenario_free(dil_scenario* scenario) { delete scenario; }

dil_status dil_dataset_generate(const dil_scenario* scenario, uint64_t length, uint64_t seed, dil_dataset** out) {
  return guarded([&] {
    require(scenario && out, "null argument");
    dil::Rng rng(seed);
    const auto& p = scenario->params;
    *out = new dil_dataset{dil::interleave(p.models, p.sched, static_cast<std::size_t>(length), rng)};
  });
}

dil_status dil_dataset_load(const char* path, dil_dataset** out) {
  return guarded([&] {
    require(path && out, "null argument");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw dil::Error(dil::ErrorCode::io_error, std::string("cannot open ") + path);
    try {
      *out = new dil_dataset{dil::read_dataset(in)};
    } catch (const dil::Error& e) {
      if (e.code() != dil::ErrorCode::parse_error) throw;
      throw dil::Error(dil::ErrorCode::parse_error, std::string(path) + ": " + e.what());
    }
  });
}

dil_status dil_dataset_save(const dil_dataset* dataset, const char* path) {
  return guarded([&] {
    require(dataset && path, "null argument");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw dil::Error(dil::ErrorCode::io_error, std::string("cannot write ") + path);
    dil::write_dataset(out, dataset->seq);
    if (!out) throw dil::Error(dil::ErrorCode::io_error, std::string("write failed for ") + path);
  });
}

size_t dil_dataset_length(const dil_dataset* dataset) { return dataset ? dataset->seq.size() : 0; }

dil_status dil_dataset_users(const dil_dataset* dataset, uint32_t* users, size_t capacity) {
  return guarded([&] {
    require(dataset != nullptr, "dataset is null");
    require(capacity >= dataset->seq.size() && (users || dataset->seq.size() == 0), "buffer too small");
    for (std::size_t t = 0; t < dataset->seq.size(); ++t) users[t] = dataset->seq.steps[t].user;
  });
}

dil_status dil_dataset_requests(const dil_dataset* dataset, uint32_t* requests, size_t capacity) {
  return guarded([&] {
    require(dataset != nullptr, "dataset is null");
    require(capacity >= dataset->seq.size() && (requests || dataset->seq.size() == 0), "buffer too small");
    for (std::size_t t = 0; t < dataset->seq.size(); ++t) requests[t] = dataset->seq.steps[t].request;
  });
}

dil_status dil_dataset_withhold_hidden(dil_dataset* dataset) {
  return guarded([&] {
    require(dataset != nullptr, "dataset is null");
    dataset->seq.hidden_known = false;
    for (auto& s : dataset->seq.steps) s.page = s.duration = 0;
  });
}

void dil_dataset_free(dil_dataset* dataset) { delete dataset; }

dil_status dil_accuracy(const uint32_t* truth, const uint32_t* pred, size_t length, double* out) {
  return guarded([&] {
    require(truth && pred && out, "null argument");
    *out = dil::accuracy({truth, length}, {pred, length});
  });
}

dil_status dil_viterbi_decode(const dil_scenario* scenario, const dil_dataset* observed, uint64_t state_limit,
                              dil_dataset** decoded, double* log_prob) {
  return guarded([&] {
    require(scenario && observed && decoded, "null argument");
    const auto& p = scenario->params;
    const auto hmm = dil::build_ahmm(p.models, p.sched, effective_limit(state_limit));
    const auto obs = observed->seq.requests();
    const auto result = dil::viterbi(hmm, obs);
    dil::LabeledSequence seq;
    seq.dims = p.dims;
    seq.steps.reserve(obs.size());
    for (std::size_t t = 0; t < obs.size(); ++t) {
      const auto state = hmm.decode(result.states[t]);
      const auto& active = state.users[state.active_user];
      seq.steps.push_back({obs[t], state.active_user, active.page.index, active.duration.remaining});
    }
    if (log_prob) *log_prob = result.log_prob;
    *decoded = new dil_dataset{std::move(seq)};
  });
}

dil_status dil_forward_loglik(const dil_scenario* scenario, const dil_dataset* observed, uint64_t state_limit,
                              double* log_prob) {
  return guarded([&] {
    require(scenario && observed && log_prob, "null argument");
    const auto& p = scenario->params;
    const auto hmm = dil::build_ahmm(p.models, p.sched, effective_limit(state_limit));
    *log_prob = dil::forward_loglik(hmm, observed->seq.requests());
  });
}

dil_status dil_ahmm_state_count(const dil_scenario* scenario, uint64_t* count) {
  return guarded([&] {
    require(scenario && count, "null argument");
    *count = dil::augmented_state_count(scenario->params.dims);
  });
}

void dil_rnn_config_default(dil_rnn_config* config) {
  if (!config) return;
  const dil::RnnConfig d;
  config->cell = d.cell == dil::CellType::lstm ? DIL_CELL_LSTM : DIL_CELL_SIMPLE;
  config->hidden_size = d.hidden_size;
  config->bptt_window = d.bptt_window;
  config->learning_rate = d.learning_rate;
  config->beta1 = d.beta1;
  config->beta2 = d.beta2;
  config->epsilon = d.epsilon;
  config->max_epochs = d.max_epochs;
  config->patience = d.patience;
  config->init_scale = d.init_scale;
  config->forget_bias = d.forget_bias;
}

dil_status dil_rnn_train(const dil_dataset* train, const dil_dataset* valid, const dil_rnn_config* config,
                         uint64_t seed, dil_rnn** out, double* best_valid_accuracy) {
  return guarded([&] {
    require(train && valid && out, "null argument");
    require(train->seq.dims.m == valid->seq.dims.m && train->seq.dims.n == valid->seq.dims.n,
            "training and validation datasets have different dimensions");
    dil_rnn_config local;
    dil_rnn_config_default(&local);
    if (config) local = *config;
    dil::RnnConfig c = to_config(local);
    c.input_size = train->seq.dims.n;
    c.output_size = train->seq.dims.m;
    dil::Rng rng(seed);
    auto result = dil::train(train->seq, valid->seq, c, rng);
    if (best_valid_accuracy) *best_valid_accuracy = result.best_valid_accuracy;
    *out = new dil_rnn{{c, std::move(result.params)}};
  });
}

dil_status dil_rnn_predict(const dil_rnn* model, const dil_dataset* observed, dil_dataset** predicted) {
  return guarded([&] {
    require(model && observed && predicted, "null argument");
    const auto& c = model->ckpt.config;
    require(observed->seq.dims.n == c.input_size && observed->seq.dims.m == c.output_size,
            "dataset dimensions do not match the model");
    const auto obs = observed->seq.requests();
    const auto users = dil::predict_users(model->ckpt.params, c, obs);
    dil::LabeledSequence seq;
    seq.dims = observed->seq.dims;
    seq.hidden_known = false;
    for (std::size_t t = 0; t < obs.size(); ++t) seq.steps.push_back({obs[t], users[t], 0, 0});
    *predicted = new dil_dataset{std::move(seq)};
  });
}

dil_status dil_rnn_save(const dil_rnn* model, const char* path) {
  return guarded([&] {
    require(model && path, "null argument");
    dil::write_json_file(path, dil::checkpoint_to_json(model->ckpt));
  });
}

dil_status dil_rnn_load(const char* path, dil_rnn** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new dil_rnn{dil::checkpoint_from_json(dil::read_json_file(path))};
  });
}

void dil_rnn_free(dil_rnn* model) { delete model; }

void dil_experiment_options_default(dil_experiment_options* options) {
  if (!options) return;
  *options = dil_experiment_options{5, 0, 0, 0, 0, 0};
}

dil_status dil_reproduce_toy(uint64_t seed, const dil_experiment_options* options, const char* out_dir) {
  return guarded([&] {
    require(out_dir != nullptr, "null output directory");
    const auto report = dil::run_toy(seed, to_options(options));
    write_report(report, out_dir, options && options->record_timing);
    if (options && options->verbose) std::cerr << "reproduce-toy finished in " << report.wall_clock_seconds << " s\n";
  });
}

dil_status dil_reproduce_cases(dil_turn_mode mode, dil_scale scale, uint64_t seed,
                               const dil_experiment_options* options, const char* out_dir) {
  return guarded([&] {
    require(out_dir != nullptr, "null output directory");
    require(scale == DIL_SCALE_DESK || scale == DIL_SCALE_FULL, "unknown scale");
    const auto report = dil::run_cases(to_mode(mode), seed, scale == DIL_SCALE_FULL ? dil::Scale::full : dil::Scale::desk,
                                       to_options(options));
    write_report(report, out_dir, options && options->record_timing);
    if (options && options->verbose) std::cerr << "reproduce-cases finished in " << report.wall_clock_seconds << " s\n";
  });
}

}  // extern "C"
