// deinterleave: command-line front end over the C API.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "deinterleave/deinterleave.h"

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kDatasetTag = 1;
constexpr std::uint64_t kValidTag = 2;

struct CliError {
  dil_status status;
};

void check(dil_status status) {
  if (status != DIL_OK) throw CliError{status};
}

using Scenario = std::unique_ptr<dil_scenario, decltype(&dil_scenario_free)>;
using Dataset = std::unique_ptr<dil_dataset, decltype(&dil_dataset_free)>;
using Rnn = std::unique_ptr<dil_rnn, decltype(&dil_rnn_free)>;

Scenario load_scenario(const std::string& path) {
  dil_scenario* s = nullptr;
  check(dil_scenario_load(path.c_str(), &s));
  return {s, dil_scenario_free};
}

Dataset load_dataset(const std::string& path) {
  dil_dataset* d = nullptr;
  check(dil_dataset_load(path.c_str(), &d));
  return {d, dil_dataset_free};
}

std::vector<uint32_t> users_of(const dil_dataset* d) {
  std::vector<uint32_t> u(dil_dataset_length(d));
  check(dil_dataset_users(d, u.data(), u.size()));
  return u;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    std::cerr << "error: cannot create " << dir << ": " << ec.message() << "\n";
    std::exit(1);
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << "\n";
  if (!out) {
    std::cerr << "error: cannot write " << path << "\n";
    std::exit(1);
  }
}

// Accuracy of `pred` against the user column of `truth`.
double score(const dil_dataset* truth, const dil_dataset* pred) {
  const auto t = users_of(truth);
  const auto p = users_of(pred);
  double acc = 0.0;
  check(dil_accuracy(t.data(), p.data(), t.size(), &acc));
  return acc;
}

dil_turn_mode parse_mode(const std::string& m) { return m == "matrix" ? DIL_TURN_MATRIX : DIL_TURN_SHARES; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate and deinterleave resolver request queues"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string out_dir = ".";
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Random seed")->default_val(0);
    cmd->add_option("--out", out_dir, "Output directory")->default_val(".");
  };

  // generate
  auto* gen = app.add_subcommand("generate", "Generate scenario parameters and a labeled dataset");
  int case_id = 1;
  bool toy = false;
  std::string mode = "shares";
  std::uint32_t n = 20, a = 10, q = 5;
  std::uint64_t length = 1000;
  bool withhold = false;
  gen->add_option("--case", case_id, "Sparsity case 1..7")->check(CLI::Range(1, 7));
  gen->add_flag("--toy", toy, "Two-page toy scenario instead of a sparsity case");
  gen->add_option("--mode", mode, "Turn model")->check(CLI::IsMember({"shares", "matrix"}));
  gen->add_option("--n", n, "Pages")->default_val(20);
  gen->add_option("--a", a, "Block size")->default_val(10);
  gen->add_option("--q", q, "Maximum requests per page")->default_val(5);
  gen->add_option("--length", length, "Requests in the dataset")->default_val(1000);
  gen->add_flag("--withhold-hidden", withhold, "Write '-' for page and duration");
  add_common(gen);

  // viterbi
  auto* vit = app.add_subcommand("viterbi", "Decode users with the augmented HMM");
  std::string params_path, dataset_path;
  std::uint64_t state_limit = 100000;
  vit->add_option("--params", params_path, "Params JSON")->required();
  vit->add_option("--dataset", dataset_path, "Dataset file")->required();
  vit->add_option("--state-limit", state_limit, "Maximum augmented state count")->default_val(100000);
  add_common(vit);

  // train
  auto* trn = app.add_subcommand("train", "Train a recurrent labeler");
  std::string valid_path;
  std::uint64_t valid_length = 0;
  dil_rnn_config rnn;
  dil_rnn_config_default(&rnn);
  std::string cell = "lstm";
  trn->add_option("--params", params_path, "Params JSON (used to draw validation data)")->required();
  trn->add_option("--dataset", dataset_path, "Training dataset")->required();
  trn->add_option("--valid", valid_path, "Validation dataset (default: drawn from --params)");
  trn->add_option("--valid-length", valid_length, "Length of drawn validation data (default: half the training set)");
  trn->add_option("--cell", cell, "Cell type")->check(CLI::IsMember({"lstm", "simple"}));
  trn->add_option("--hidden", rnn.hidden_size, "Hidden units")->capture_default_str();
  trn->add_option("--window", rnn.bptt_window, "Truncated BPTT window")->capture_default_str();
  trn->add_option("--lr", rnn.learning_rate, "Adam learning rate")->capture_default_str();
  trn->add_option("--max-epochs", rnn.max_epochs, "Epoch cap")->capture_default_str();
  trn->add_option("--patience", rnn.patience, "Early-stopping patience")->capture_default_str();
  add_common(trn);

  // predict
  auto* prd = app.add_subcommand("predict", "Label a dataset with a trained checkpoint");
  std::string ckpt_path;
  prd->add_option("--checkpoint", ckpt_path, "Checkpoint JSON")->required();
  prd->add_option("--dataset", dataset_path, "Dataset file")->required();
  add_common(prd);

  // reproduce-*
  dil_experiment_options xopt;
  dil_experiment_options_default(&xopt);
  bool timing = false, verbose = false;
  std::vector<int> cases;
  auto add_experiment = [&](CLI::App* cmd) {
    cmd->add_option("--realizations", xopt.realizations, "Realizations per configuration")->capture_default_str();
    cmd->add_option("--max-epochs", xopt.max_epochs, "Override the LSTM epoch cap");
    cmd->add_option("--threads", xopt.threads, "Worker threads (0: all cores)");
    cmd->add_flag("--record-timing", timing, "Store wall-clock seconds in report.json");
    cmd->add_flag("--verbose", verbose, "Progress on stderr");
    add_common(cmd);
  };
  auto* rtoy = app.add_subcommand("reproduce-toy", "Viterbi vs LSTM on the two-page toy scenario");
  add_experiment(rtoy);
  auto* rcases = app.add_subcommand("reproduce-cases", "LSTM accuracy over the seven sparsity cases");
  std::string scale = "desk";
  rcases->add_option("--mode", mode, "Turn model")->check(CLI::IsMember({"shares", "matrix"}));
  rcases->add_option("--scale", scale, "Sequence budget")->check(CLI::IsMember({"desk", "full"}));
  rcases->add_option("--cases", cases, "Subset of cases (default: all)")->delimiter(',')->check(CLI::Range(1, 7));
  add_experiment(rcases);

  CLI11_PARSE(app, argc, argv);

  try {
    ensure_dir(out_dir);
    const fs::path out(out_dir);

    if (*gen) {
      dil_scenario* raw = nullptr;
      if (toy) {
        check(dil_scenario_generate_toy(seed, &raw));
      } else {
        check(dil_scenario_generate_case(case_id, parse_mode(mode), n, a, q, seed, &raw));
      }
      Scenario scenario(raw, dil_scenario_free);
      dil_dataset* ds = nullptr;
      check(dil_dataset_generate(scenario.get(), length, dil_derive_seed(seed, kDatasetTag, 0), &ds));
      Dataset dataset(ds, dil_dataset_free);
      if (withhold) check(dil_dataset_withhold_hidden(dataset.get()));
      check(dil_scenario_save(scenario.get(), (out / "params.json").c_str()));
      check(dil_dataset_save(dataset.get(), (out / "dataset.tsv").c_str()));
      std::cout << "wrote " << (out / "params.json").string() << " and " << (out / "dataset.tsv").string() << "\n";
    } else if (*vit) {
      auto scenario = load_scenario(params_path);
      auto dataset = load_dataset(dataset_path);
      dil_dataset* dec = nullptr;
      double log_prob = 0.0;
      check(dil_viterbi_decode(scenario.get(), dataset.get(), state_limit, &dec, &log_prob));
      Dataset decoded(dec, dil_dataset_free);
      const double acc = score(dataset.get(), decoded.get());
      check(dil_dataset_save(decoded.get(), (out / "predictions.tsv").c_str()));
      write_json(out / "summary.json", {{"method", "viterbi"},
                                        {"length", dil_dataset_length(dataset.get())},
                                        {"log_prob", log_prob},
                                        {"accuracy", acc}});
      std::printf("viterbi accuracy %.4f  log-prob %.6f\n", acc, log_prob);
    } else if (*trn) {
      auto scenario = load_scenario(params_path);
      auto train = load_dataset(dataset_path);
      Dataset valid(nullptr, dil_dataset_free);
      if (!valid_path.empty()) {
        valid = load_dataset(valid_path);
      } else {
        const std::uint64_t len = valid_length ? valid_length : std::max<std::uint64_t>(1, dil_dataset_length(train.get()) / 2);
        dil_dataset* v = nullptr;
        check(dil_dataset_generate(scenario.get(), len, dil_derive_seed(seed, kValidTag, 0), &v));
        valid.reset(v);
      }
      rnn.cell = cell == "lstm" ? DIL_CELL_LSTM : DIL_CELL_SIMPLE;
      dil_rnn* model = nullptr;
      double best = 0.0;
      check(dil_rnn_train(train.get(), valid.get(), &rnn, seed, &model, &best));
      Rnn trained(model, dil_rnn_free);
      check(dil_rnn_save(trained.get(), (out / "checkpoint.json").c_str()));
      write_json(out / "summary.json", {{"method", cell}, {"best_valid_accuracy", best}});
      std::printf("best validation accuracy %.4f\n", best);
    } else if (*prd) {
      dil_rnn* model = nullptr;
      check(dil_rnn_load(ckpt_path.c_str(), &model));
      Rnn loaded(model, dil_rnn_free);
      auto dataset = load_dataset(dataset_path);
      dil_dataset* p = nullptr;
      check(dil_rnn_predict(loaded.get(), dataset.get(), &p));
      Dataset predicted(p, dil_dataset_free);
      const double acc = score(dataset.get(), predicted.get());
      check(dil_dataset_save(predicted.get(), (out / "predictions.tsv").c_str()));
      write_json(out / "summary.json", {{"method", "rnn"}, {"length", dil_dataset_length(dataset.get())}, {"accuracy", acc}});
      std::printf("rnn accuracy %.4f\n", acc);
    } else if (*rtoy || *rcases) {
      xopt.record_timing = timing;
      xopt.verbose = verbose;
      for (int c : cases) xopt.case_mask |= 1u << (c - 1);
      if (*rtoy) {
        check(dil_reproduce_toy(seed, &xopt, out_dir.c_str()));
      } else {
        check(dil_reproduce_cases(parse_mode(mode), scale == "full" ? DIL_SCALE_FULL : DIL_SCALE_DESK, seed, &xopt,
                                  out_dir.c_str()));
      }
      std::ifstream table(out / "report.txt");
      std::cout << table.rdbuf();
    }
  } catch (const CliError& e) {
    std::cerr << "error (" << dil_status_string(e.status) << "): " << dil_last_error() << "\n";
    return 2;
  }
  return 0;
}
