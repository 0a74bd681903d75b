#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "interleaver.hpp"
#include "rnn.hpp"

namespace dil {

struct MethodResult {
  std::string name;
  std::vector<double> accuracies;  // one per realization
  double mean = 0.0;
  double std = 0.0;  // population standard deviation over realizations
};

struct ConfigResult {
  std::string label;
  std::vector<std::uint64_t> seeds;
  std::vector<MethodResult> methods;
  double nominal_baseline = 0.0;               // expected accuracy of the majority predictor
  std::vector<double> empirical_baselines;     // majority predictor on the evaluation data
  double wall_clock_seconds = 0.0;
};

struct ExperimentReport {
  std::string experiment;  // "toy" or "cases"
  std::string mode;        // "shares" or "matrix"
  std::string scale;       // "desk" or "full"
  std::uint64_t seed = 0;
  std::vector<ConfigResult> configs;
  double wall_clock_seconds = 0.0;
};

enum class Scale { desk, full };

struct ExperimentOptions {
  std::uint32_t realizations = 5;
  RnnConfig rnn;  // input/output sizes are filled in per scenario
  std::vector<int> cases = {1, 2, 3, 4, 5, 6, 7};
  std::uint32_t test_sequences = 100;
  std::uint32_t test_length = 100;
  unsigned threads = 0;  // 0: hardware concurrency
  std::function<void(const std::string&)> progress;
};

// Population mean and standard deviation.
void summarize(MethodResult& result);

// Predicts argmax of the shares vector, or of the stationary law of A.
std::uint32_t baseline_majority(const TurnScheduler& sched);

// Expected accuracy of baseline_majority's constant predictor.
double baseline_expected_accuracy(const TurnScheduler& sched);

// Sequence budgets (train, validation) for the sparsity-case experiments.
std::pair<std::size_t, std::size_t> case_budget(Scale scale);

// Toy experiment: per realization, Viterbi with the true augmented HMM on a
// fresh 1000-request sequence and an LSTM trained on 6000/3000 and tested on
// 1000 requests.
ExperimentReport run_toy(std::uint64_t seed, const ExperimentOptions& options = {});

// Sparsity cases (n=20, a=10, q=5): per case and realization, one LSTM,
// scored on `test_sequences` fresh sequences of `test_length` requests.
ExperimentReport run_cases(TurnScheduler::Mode mode, std::uint64_t seed, Scale scale,
                           const ExperimentOptions& options = {});

// Plain-text accuracy table (methods or cases as columns).
std::string render_table(const ExperimentReport& report);

// Seed of realization `index` for job family `tag`.
std::uint64_t job_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index);

}  // namespace dil
