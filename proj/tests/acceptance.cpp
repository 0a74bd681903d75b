// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// gated criterion fails. Soft checks print SOFT-PASS/SOFT-FAIL and never gate.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ahmm.hpp"
#include "experiments.hpp"
#include "grad_check.hpp"
#include "io.hpp"
#include "oracles.hpp"
#include "synthgen.hpp"

using namespace dil;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20170605;

int g_failures = 0;

void verdict(int id, bool ok, const std::string& detail, bool gated = true) {
  const char* tag = gated ? (ok ? "PASS" : "FAIL") : (ok ? "SOFT-PASS" : "SOFT-FAIL");
  std::printf("[%s] criterion %d: %s\n", tag, id, detail.c_str());
  std::fflush(stdout);
  if (gated && !ok) ++g_failures;
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void criterion_state_counts() {
  Rng rng(kSeed);
  const auto toy = gen_toy(rng);
  const auto toy_count = build_ahmm(toy.models, toy.sched).state_count();
  const auto big = gen_case({3, 20, 10, 5, TurnScheduler::Mode::shares}, rng);
  const auto big_count = build_ahmm(big.models, big.sched).state_count();
  const auto formula = augmented_state_count({2, 20, 5});
  verdict(1, toy_count == 32 && big_count == 20000 && formula == 20000,
          "toy states " + std::to_string(toy_count) + " (want 32), m=2 n=20 q=5 states " +
              std::to_string(big_count) + " (want 20000)");
}

// Criteria 2 and 3 share the instances.
void criteria_oracles() {
  const int instances = 60;
  const double max_paths = 3e7;
  Rng rng(kSeed + 2);
  int viterbi_ok = 0, forward_ok = 0, at_max_length = 0;
  double worst_viterbi = 0.0, worst_forward = 0.0;
  for (int i = 0; i < instances; ++i) {
    const auto inst = testing::random_instance(rng);
    const auto hmm = build_ahmm(inst.models, inst.sched);
    std::size_t T = 1 + rng.uniform_index(8);
    while (T > 1 && testing::path_count(hmm, T) > max_paths) --T;
    at_max_length += T == 8;
    const auto obs = interleave(inst.models, inst.sched, T, rng).requests();

    const auto brute = testing::brute_force_viterbi(hmm, obs);
    const auto vr = viterbi(hmm, obs);
    const double dv = std::abs(vr.log_prob - brute.log_prob);
    worst_viterbi = std::max(worst_viterbi, dv);
    viterbi_ok += dv <= 1e-9 && vr.states == brute.path;

    const double bl = testing::brute_force_loglik(hmm, obs);
    const double fl = forward_loglik(hmm, obs);
    const double rel = std::abs(fl - bl) / std::max(1.0, std::abs(bl));
    worst_forward = std::max(worst_forward, rel);
    forward_ok += rel <= 1e-9;
  }
  verdict(2, viterbi_ok == instances,
          std::to_string(viterbi_ok) + "/" + std::to_string(instances) +
              " instances match exhaustive search (paths equal, max |dlogp| " + sci(worst_viterbi) +
              ", tol 1e-9); " + std::to_string(at_max_length) + " at T=8");
  verdict(3, forward_ok == instances,
          std::to_string(forward_ok) + "/" + std::to_string(instances) +
              " forward log-likelihoods match the path sum (max rel err " + sci(worst_forward) + ", tol 1e-9)");
}

// Per-slot accuracy of the best slotwise guess when every user sits on its own
// page: sum_r max_u share_u O_u(u, r).
double toy_slot_bound(const ScenarioParams& p) {
  double total = 0.0;
  for (std::uint32_t r = 0; r < p.dims.n; ++r) {
    double best = 0.0;
    for (std::uint32_t u = 0; u < p.dims.m; ++u) {
      best = std::max(best, p.sched.initial()[u] * p.models[u].output(u, r));
    }
    total += best;
  }
  return total;
}

void criterion_toy() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentOptions opts;
  const auto report = run_toy(kSeed, opts);
  const auto& cfg = report.configs.at(0);
  const double vit = cfg.methods.at(0).mean;
  const double lstm = cfg.methods.at(1).mean;
  double bound = 0.0;
  for (auto s : cfg.seeds) {
    Rng rng(s);
    bound += toy_slot_bound(gen_toy(rng));
  }
  bound /= static_cast<double>(cfg.seeds.size());
  const bool ok = vit >= 0.45 && vit <= 0.60 && lstm >= 0.75 && lstm > vit;
  verdict(4, ok,
          "Viterbi mean " + fmt(vit) + " (std " + fmt(cfg.methods.at(0).std) + ", want [0.45, 0.60]), LSTM mean " +
              fmt(lstm) + " (std " + fmt(cfg.methods.at(1).std) + ", want >= 0.75 and > Viterbi); mean slotwise bound " +
              fmt(bound) + "; " + fmt(seconds_since(t0), 1) + " s");
  std::printf("%s", render_table(report).c_str());
}

void criteria_cases() {
  const double ref_shares[] = {0.63, 0.70, 0.62, 0.74, 0.65};
  const double ref_matrix[] = {0.77, 0.69, 0.67, 0.82, 0.78};
  std::map<std::string, ExperimentReport> reports;
  const auto t0 = std::chrono::steady_clock::now();
  for (auto mode : {TurnScheduler::Mode::shares, TurnScheduler::Mode::matrix}) {
    ExperimentOptions opts;
    reports[mode == TurnScheduler::Mode::shares ? "shares" : "matrix"] = run_cases(mode, kSeed, Scale::desk, opts);
  }
  const double elapsed = seconds_since(t0);

  bool easy_ok = true;
  std::ostringstream easy;
  for (const auto& [mode, rep] : reports) {
    for (int c = 0; c < 2; ++c) {
      const double mean = rep.configs.at(c).methods.at(0).mean;
      easy_ok = easy_ok && mean >= 0.99;
      easy << mode << " case " << c + 1 << " " << fmt(mean) << "; ";
    }
  }
  verdict(5, easy_ok, easy.str() + "want >= 0.99; " + fmt(elapsed, 1) + " s for both modes, all cases");

  bool band_ok = true;
  std::ostringstream band;
  for (const auto& [mode, rep] : reports) {
    const double* ref = mode == "shares" ? ref_shares : ref_matrix;
    const double base_floor = mode == "shares" ? 0.6 : 0.5;
    band << mode << " (floor " << fmt(base_floor, 1) << "):";
    for (int c = 2; c < 7; ++c) {
      const auto& cfg = rep.configs.at(c);
      const double mean = cfg.methods.at(0).mean;
      const bool in_band = std::abs(mean - ref[c - 2]) <= 0.15 && mean > base_floor;
      band_ok = band_ok && in_band;
      band << " case " << c + 1 << " " << fmt(mean, 3) << " (ref " << fmt(ref[c - 2], 2) << ", majority "
           << fmt(cfg.nominal_baseline, 2) << (in_band ? "" : ", out") << ")";
    }
    band << "; ";
  }
  verdict(6, band_ok, band.str(), false);
  for (const auto& [mode, rep] : reports) std::printf("%s", render_table(rep).c_str());
}

void criterion_gradients() {
  Rng rng(kSeed + 7);
  double worst = 0.0;
  int configs = 0;
  for (auto cell : {CellType::simple, CellType::lstm}) {
    for (int i = 0; i < 20; ++i) {
      const auto hidden = 1 + static_cast<std::uint32_t>(rng.uniform_index(8));
      const auto T = 1 + rng.uniform_index(10);
      worst = std::max(worst, testing::max_gradient_error(cell, hidden, T, rng));
      ++configs;
    }
  }
  verdict(7, worst <= 1e-4,
          std::to_string(configs) + " configurations (20 per cell), max relative error " + sci(worst) + " (tol 1e-4)");
}

double worst_row_error(const ProbTable& t) {
  double worst = 0.0;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    double sum = 0.0;
    for (double v : t.row(r)) sum += v;
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

void criterion_stochasticity() {
  Rng rng(kSeed + 8);
  double worst = 0.0;
  int scenarios = 0;
  auto check = [&](const ScenarioParams& p) {
    ++scenarios;
    for (const auto& m : p.models) {
      worst = std::max({worst, worst_row_error(m.transition), worst_row_error(m.duration_dist),
                        worst_row_error(m.output)});
    }
    for (std::uint32_t u = 0; u < p.dims.m; ++u) {
      double sum = 0.0;
      for (std::uint32_t v = 0; v < p.dims.m; ++v) sum += p.sched.turn_prob(u, v);
      worst = std::max(worst, std::abs(sum - 1.0));
    }
  };
  for (int rep = 0; rep < 5; ++rep) {
    check(gen_toy(rng));
    for (int c = 1; c <= 7; ++c) {
      for (auto mode : {TurnScheduler::Mode::shares, TurnScheduler::Mode::matrix}) check(gen_case({c, 20, 10, 5, mode}, rng));
    }
  }

  const std::size_t T = 100000;
  const auto toy = gen_toy(rng);
  const auto seq = interleave(toy.models, toy.sched, T, rng);
  double freq_err = 0.0;
  std::vector<double> counts(2, 0.0);
  for (const auto& s : seq.steps) counts[s.user] += 1.0;
  for (std::uint32_t u = 0; u < 2; ++u) {
    freq_err = std::max(freq_err, std::abs(counts[u] / T - toy.sched.initial()[u]));
  }
  verdict(8, worst <= 1e-12 && freq_err <= 0.01,
          std::to_string(scenarios) + " generated scenarios, max row-sum error " + sci(worst) +
              " (tol 1e-12); label frequencies at T=1e5 off by " + fmt(freq_err) + " (tol 0.01)");
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_text_file(e.path());
  }
  return files;
}

void criterion_determinism() {
  const fs::path root = fs::temp_directory_path() / "dil_acceptance_cli";
  fs::remove_all(root);
  const std::string cli = DIL_CLI_PATH;
  // Inputs shared by the commands that consume files.
  const fs::path inputs = root / "inputs";
  const std::string prep = "(\"" + cli + "\" generate --case 3 --mode matrix --length 2000 --seed 11 --out \"" +
                           inputs.string() + "/case\" && \"" + cli + "\" generate --toy --length 300 --seed 12 --out \"" +
                           inputs.string() + "/toy\" && \"" + cli + "\" train --params \"" + inputs.string() +
                           "/case/params.json\" --dataset \"" + inputs.string() +
                           "/case/dataset.tsv\" --max-epochs 2 --seed 13 --out \"" + inputs.string() + "/model\")";
  if (std::system((prep + " > /dev/null").c_str()) != 0) {
    verdict(9, false, "could not prepare CLI inputs");
    return;
  }
  const std::string in = inputs.string();
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"generate-case", "generate --case 6 --mode shares --length 500 --seed 5"},
      {"generate-toy", "generate --toy --length 500 --withhold-hidden --seed 5"},
      {"viterbi", "viterbi --params \"" + in + "/toy/params.json\" --dataset \"" + in + "/toy/dataset.tsv\" --seed 5"},
      {"train", "train --params \"" + in + "/case/params.json\" --dataset \"" + in +
                    "/case/dataset.tsv\" --max-epochs 2 --seed 5"},
      {"predict", "predict --checkpoint \"" + in + "/model/checkpoint.json\" --dataset \"" + in +
                      "/case/dataset.tsv\" --seed 5"},
      {"reproduce-toy", "reproduce-toy --realizations 1 --max-epochs 2 --seed 5"},
      {"reproduce-cases", "reproduce-cases --mode matrix --scale desk --cases 1,4 --realizations 1 --max-epochs 2 --seed 5"},
  };
  int identical = 0;
  std::string mismatched;
  for (const auto& [name, args] : commands) {
    std::map<std::string, std::string> runs[2];
    bool ran = true;
    for (int k = 0; k < 2; ++k) {
      const fs::path out = root / name / std::to_string(k);
      const std::string cmd = "\"" + cli + "\" " + args + " --out \"" + out.string() + "\" > /dev/null";
      ran = ran && std::system(cmd.c_str()) == 0 && fs::exists(out);
      if (ran) runs[k] = snapshot(out);
    }
    if (ran && !runs[0].empty() && runs[0] == runs[1]) {
      ++identical;
    } else {
      mismatched += " " + name;
    }
  }
  fs::remove_all(root);
  verdict(9, identical == static_cast<int>(commands.size()),
          std::to_string(identical) + "/" + std::to_string(commands.size()) +
              " CLI commands produced byte-identical outputs on rerun" +
              (mismatched.empty() ? "" : " (differ:" + mismatched + ")"));
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  criterion_state_counts();
  criteria_oracles();
  criterion_gradients();
  criterion_stochasticity();
  criterion_determinism();
  criterion_toy();
  criteria_cases();
  std::printf("gated failures: %d; total %.1f s\n", g_failures, seconds_since(t0));
  return g_failures == 0 ? 0 : 1;
}
