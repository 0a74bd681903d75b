#include "experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "ahmm.hpp"
#include "error.hpp"
#include "metrics.hpp"
#include "synthgen.hpp"

namespace dil {

namespace {

constexpr std::uint64_t kToyTag = 0x746f79;  // "toy"
constexpr std::size_t kToyViterbiLength = 1000;
constexpr std::size_t kToyTrain = 6000, kToyValid = 3000, kToyTest = 1000;
constexpr std::uint32_t kCaseN = 20, kCaseA = 10, kCaseQ = 5;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Runs jobs 0..count-1 on a small thread pool; rethrows the first failure.
void run_jobs(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

RnnConfig config_for(const RnnConfig& base, const ScenarioDims& dims) {
  RnnConfig c = base;
  c.input_size = dims.n;
  c.output_size = dims.m;
  return c;
}

double constant_accuracy(const std::vector<std::uint32_t>& truth, std::uint32_t user) {
  return accuracy(truth, std::vector<std::uint32_t>(truth.size(), user));
}

void report_progress(const ExperimentOptions& options, const std::string& msg) {
  if (options.progress) options.progress(msg);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::uint64_t job_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index) {
  return derive_seed(master, tag, index);
}

void summarize(MethodResult& result) {
  const auto& a = result.accuracies;
  if (a.empty()) {
    result.mean = result.std = 0.0;
    return;
  }
  double sum = 0.0;
  for (double v : a) sum += v;
  result.mean = sum / static_cast<double>(a.size());
  double ss = 0.0;
  for (double v : a) ss += (v - result.mean) * (v - result.mean);
  result.std = std::sqrt(ss / static_cast<double>(a.size()));
}

std::uint32_t baseline_majority(const TurnScheduler& sched) {
  const auto& law = sched.initial();
  return static_cast<std::uint32_t>(std::max_element(law.begin(), law.end()) - law.begin());
}

double baseline_expected_accuracy(const TurnScheduler& sched) {
  return sched.initial()[baseline_majority(sched)];
}

std::pair<std::size_t, std::size_t> case_budget(Scale scale) {
  return scale == Scale::full ? std::pair<std::size_t, std::size_t>{60000, 30000}
                              : std::pair<std::size_t, std::size_t>{12000, 6000};
}

ExperimentReport run_toy(std::uint64_t seed, const ExperimentOptions& options) {
  const auto start = Clock::now();
  const std::size_t R = options.realizations;
  std::vector<double> viterbi_acc(R), lstm_acc(R), base(R), nominal(R);
  std::vector<std::uint64_t> seeds(R);
  for (std::size_t r = 0; r < R; ++r) seeds[r] = job_seed(seed, kToyTag, r);

  run_jobs(R, options.threads, [&](std::size_t r) {
    Rng rng(seeds[r]);
    const ScenarioParams params = gen_toy(rng);
    const LabeledSequence decode_seq = interleave(params.models, params.sched, kToyViterbiLength, rng);
    const LabeledSequence train_seq = interleave(params.models, params.sched, kToyTrain, rng);
    const LabeledSequence valid_seq = interleave(params.models, params.sched, kToyValid, rng);
    const LabeledSequence test_seq = interleave(params.models, params.sched, kToyTest, rng);

    const AugmentedHmm hmm = build_ahmm(params.models, params.sched);
    const auto vr = viterbi(hmm, decode_seq.requests());
    viterbi_acc[r] = accuracy(decode_seq.users(), vr.users);

    const RnnConfig config = config_for(options.rnn, params.dims);
    const TrainResult tr = train(train_seq, valid_seq, config, rng);
    const auto truth = test_seq.users();
    lstm_acc[r] = accuracy(truth, predict_users(tr.params, config, test_seq.requests()));

    const std::uint32_t majority = baseline_majority(params.sched);
    base[r] = constant_accuracy(truth, majority);
    nominal[r] = baseline_expected_accuracy(params.sched);
    report_progress(options, "toy realization " + std::to_string(r) + ": viterbi " +
                                 fmt(viterbi_acc[r]) + ", lstm " + fmt(lstm_acc[r]));
  });

  ExperimentReport report;
  report.experiment = "toy";
  report.mode = "shares";
  report.scale = "desk";
  report.seed = seed;
  ConfigResult cfg;
  cfg.label = "toy";
  cfg.seeds = seeds;
  cfg.methods = {{"viterbi", viterbi_acc}, {"lstm", lstm_acc}};
  for (auto& m : cfg.methods) summarize(m);
  cfg.empirical_baselines = base;
  cfg.nominal_baseline = R ? nominal[0] : 0.6;
  cfg.wall_clock_seconds = seconds_since(start);
  report.configs.push_back(std::move(cfg));
  report.wall_clock_seconds = seconds_since(start);
  return report;
}

ExperimentReport run_cases(TurnScheduler::Mode mode, std::uint64_t seed, Scale scale,
                           const ExperimentOptions& options) {
  const auto start = Clock::now();
  const std::size_t C = options.cases.size();
  const std::size_t R = options.realizations;
  const auto [train_len, valid_len] = case_budget(scale);
  const std::uint64_t mode_tag = mode == TurnScheduler::Mode::shares ? 0 : 1;

  std::vector<double> acc(C * R), base(C * R), nominal(C * R), secs(C * R);
  std::vector<std::uint64_t> seeds(C * R);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t r = 0; r < R; ++r) {
      seeds[c * R + r] = job_seed(seed, (static_cast<std::uint64_t>(options.cases[c]) << 1) | mode_tag, r);
    }
  }

  run_jobs(C * R, options.threads, [&](std::size_t job) {
    const auto job_start = Clock::now();
    const int case_id = options.cases[job / R];
    Rng rng(seeds[job]);
    const ScenarioParams params = gen_case({case_id, kCaseN, kCaseA, kCaseQ, mode}, rng);
    const LabeledSequence train_seq = interleave(params.models, params.sched, train_len, rng);
    const LabeledSequence valid_seq = interleave(params.models, params.sched, valid_len, rng);
    const RnnConfig config = config_for(options.rnn, params.dims);
    const TrainResult tr = train(train_seq, valid_seq, config, rng);

    const std::uint32_t majority = baseline_majority(params.sched);
    double acc_sum = 0.0, base_sum = 0.0;
    for (std::uint32_t k = 0; k < options.test_sequences; ++k) {
      const LabeledSequence test = interleave(params.models, params.sched, options.test_length, rng);
      const auto truth = test.users();
      acc_sum += accuracy(truth, predict_users(tr.params, config, test.requests()));
      base_sum += constant_accuracy(truth, majority);
    }
    acc[job] = acc_sum / options.test_sequences;
    base[job] = base_sum / options.test_sequences;
    nominal[job] = baseline_expected_accuracy(params.sched);
    secs[job] = seconds_since(job_start);
    report_progress(options, "case " + std::to_string(case_id) + " realization " +
                                 std::to_string(job % R) + ": lstm " + fmt(acc[job]) + " (best epoch " +
                                 std::to_string(tr.best_epoch) + ")");
  });

  ExperimentReport report;
  report.experiment = "cases";
  report.mode = mode == TurnScheduler::Mode::shares ? "shares" : "matrix";
  report.scale = scale == Scale::full ? "full" : "desk";
  report.seed = seed;
  for (std::size_t c = 0; c < C; ++c) {
    ConfigResult cfg;
    cfg.label = "case " + std::to_string(options.cases[c]);
    MethodResult lstm{"lstm", {}};
    double nominal_sum = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      const std::size_t j = c * R + r;
      cfg.seeds.push_back(seeds[j]);
      lstm.accuracies.push_back(acc[j]);
      cfg.empirical_baselines.push_back(base[j]);
      nominal_sum += nominal[j];
      cfg.wall_clock_seconds += secs[j];
    }
    summarize(lstm);
    cfg.methods.push_back(std::move(lstm));
    cfg.nominal_baseline = R ? nominal_sum / static_cast<double>(R) : 0.0;
    report.configs.push_back(std::move(cfg));
  }
  report.wall_clock_seconds = seconds_since(start);
  return report;
}

std::string render_table(const ExperimentReport& report) {
  std::ostringstream out;
  if (report.experiment == "toy") {
    const auto& cfg = report.configs.at(0);
    out << "Method            Viterbi   LSTM\n";
    out << "Mean Accuracy     " << fmt(cfg.methods.at(0).mean) << "      " << fmt(cfg.methods.at(1).mean) << "\n";
    out << "Std of Accuracy   " << fmt(cfg.methods.at(0).std) << "      " << fmt(cfg.methods.at(1).std) << "\n";
    out << "Baseline accuracy (majority user): " << fmt(cfg.nominal_baseline) << "\n";
    out << "Realizations: " << cfg.methods.at(0).accuracies.size() << ", seed " << report.seed << "\n";
    return out.str();
  }
  const char* row_label = report.mode == "shares" ? "alpha" : "A";
  out << "Deinterleaving accuracy of LSTM (" << report.mode << " mode, " << report.scale << " scale)\n";
  out << "Case          ";
  for (const auto& cfg : report.configs) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%6s", cfg.label.substr(cfg.label.find(' ') + 1).c_str());
    out << buf;
  }
  out << "\n";
  auto line = [&](const char* head, auto value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%-6s%-8s", head == std::string("Mean") ? row_label : "", head);
    out << buf;
    for (const auto& cfg : report.configs) {
      std::snprintf(buf, sizeof buf, "%6s", fmt(value(cfg)).c_str());
      out << buf;
    }
    out << "\n";
  };
  line("Mean", [](const ConfigResult& c) { return c.methods.at(0).mean; });
  line("Std", [](const ConfigResult& c) { return c.methods.at(0).std; });
  line("Base", [](const ConfigResult& c) { return c.nominal_baseline; });
  out << "Seed " << report.seed << "\n";
  return out.str();
}

}  // namespace dil
