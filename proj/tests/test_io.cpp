#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "error.hpp"
#include "io.hpp"

using namespace dil;

namespace {

LabeledSequence sample_sequence(std::size_t T, std::uint64_t seed) {
  Rng rng(seed);
  const auto params = gen_case({4, 8, 4, 3, TurnScheduler::Mode::matrix}, rng);
  return interleave(params.models, params.sched, T, rng);
}

std::string parse_message(const std::string& text) {
  std::istringstream in(text);
  try {
    (void)read_dataset(in);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse_error);
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("dataset round trip") {
  const auto seq = sample_sequence(200, 1);
  std::ostringstream out;
  write_dataset(out, seq);
  std::istringstream in(out.str());
  CHECK(read_dataset(in) == seq);
}

TEST_CASE("empty dataset") {
  LabeledSequence seq;
  seq.dims = {2, 3, 2};
  std::ostringstream out;
  write_dataset(out, seq);
  CHECK(out.str() == "#deinterleave-v1 m=2 n=3 q=2 T=0\n");
  std::istringstream in(out.str());
  const auto back = read_dataset(in);
  CHECK(back.size() == 0);
  CHECK(back.dims == seq.dims);
}

TEST_CASE("withheld hidden columns") {
  auto seq = sample_sequence(20, 2);
  seq.hidden_known = false;
  std::ostringstream out;
  write_dataset(out, seq);
  CHECK(out.str().find("\t-\t-\n") != std::string::npos);
  std::istringstream in(out.str());
  const auto back = read_dataset(in);
  CHECK_FALSE(back.hidden_known);
  CHECK(back.requests() == seq.requests());
  CHECK(back.users() == seq.users());
}

TEST_CASE("dataset diagnostics carry line numbers") {
  CHECK(parse_message("").find("line 1") != std::string::npos);
  CHECK(parse_message("#other m=2 n=2 q=2 T=0\n").find("line 1") != std::string::npos);
  CHECK(parse_message("#deinterleave-v1 m=2 n=2 T=0\n").find("line 1") != std::string::npos);
  CHECK(parse_message("#deinterleave-v1 m=2 n=2 q=2 T=2\n0\t0\t1\t0\t1\n").find("line 3") != std::string::npos);
  CHECK(parse_message("#deinterleave-v1 m=2 n=2 q=2 T=1\n0\t0\t1\t0\n").find("line 2") != std::string::npos);
  CHECK(parse_message("#deinterleave-v1 m=2 n=2 q=2 T=1\n0\t2\t1\t0\t1\n").find("user") != std::string::npos);
  CHECK(parse_message("#deinterleave-v1 m=2 n=2 q=2 T=1\n0\t0\t5\t0\t1\n").find("request") != std::string::npos);
  CHECK(parse_message("#deinterleave-v1 m=2 n=2 q=2 T=1\n0\t0\t1\t0\t3\n").find("duration") != std::string::npos);
  CHECK(parse_message("#deinterleave-v1 m=2 n=2 q=2 T=1\n0\t0\tx\t0\t1\n").find("line 2") != std::string::npos);
  CHECK(parse_message("#deinterleave-v1 m=2 n=2 q=2 T=1\n1\t0\t1\t0\t1\n").find("slot") != std::string::npos);
  CHECK(parse_message("#deinterleave-v1 m=2 n=2 q=2 T=2\n0\t0\t1\t0\t1\n1\t0\t1\t-\t-\n").find("line 3") !=
        std::string::npos);
  CHECK(parse_message("#deinterleave-v1 m=2 n=2 q=2 T=1\n0\t0\t1\t0\t1\n0\t0\t1\t0\t1\n").find("trailing") !=
        std::string::npos);
}

TEST_CASE("scenario round trip") {
  for (auto mode : {TurnScheduler::Mode::shares, TurnScheduler::Mode::matrix}) {
    Rng rng(3);
    const auto params = gen_case({6, 10, 4, 3, mode}, rng);
    const auto j = scenario_to_json(params);
    CHECK(j.at("P").size() == 2);
    CHECK(j.at("pw").at(0).size() == 10);
    CHECK(j.at("pw").at(0).at(0).size() == 3);
    CHECK(scenario_from_json(nlohmann::json::parse(j.dump())) == params);
  }
}

TEST_CASE("scenario validation on load") {
  Rng rng(4);
  auto j = scenario_to_json(gen_toy(rng));
  j["O"][0][0][0] = 2.0;
  CHECK_THROWS_AS(scenario_from_json(j), Error);
  auto k = scenario_to_json(gen_toy(rng));
  k.erase("pw");
  try {
    (void)scenario_from_json(k);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse_error);
  }
}

TEST_CASE("checkpoint round trip") {
  RnnConfig c;
  c.cell = CellType::simple;
  c.hidden_size = 5;
  c.input_size = 4;
  c.output_size = 3;
  Rng rng(5);
  const Checkpoint ckpt{c, init_params(c, rng)};
  const auto back = checkpoint_from_json(nlohmann::json::parse(checkpoint_to_json(ckpt).dump()));
  CHECK(back.params == ckpt.params);
  CHECK(back.config.cell == CellType::simple);
  CHECK(back.config.hidden_size == 5);
  auto bad = checkpoint_to_json(ckpt);
  bad["format"] = "other";
  CHECK_THROWS_AS(checkpoint_from_json(bad), Error);
}

TEST_CASE("report round trip") {
  ExperimentReport r;
  r.experiment = "cases";
  r.mode = "shares";
  r.scale = "desk";
  r.seed = 42;
  ConfigResult cfg;
  cfg.label = "Case 1";
  cfg.seeds = {7, 8};
  MethodResult m{"LSTM", {0.9, 0.8}, 0.0, 0.0};
  summarize(m);
  cfg.methods.push_back(m);
  cfg.nominal_baseline = 0.6;
  cfg.empirical_baselines = {0.61, 0.59};
  cfg.wall_clock_seconds = 3.0;
  r.configs.push_back(cfg);

  const auto j = report_to_json(r, false);
  CHECK_FALSE(j.contains("wall_clock_seconds"));
  CHECK_FALSE(j.at("configs").at(0).contains("wall_clock_seconds"));
  const auto back = report_from_json(j);
  CHECK(back.configs.at(0).methods.at(0).accuracies == m.accuracies);
  CHECK(back.configs.at(0).methods.at(0).mean == m.mean);
  CHECK(back.seed == 42);
  CHECK(report_to_json(r, true).at("configs").at(0).at("wall_clock_seconds") == 3.0);
}

TEST_CASE("file helpers") {
  const auto dir = std::filesystem::temp_directory_path() / "dil_test_io";
  std::filesystem::create_directories(dir);
  write_text_file(dir / "a.txt", "hello\n");
  CHECK(read_text_file(dir / "a.txt") == "hello\n");
  write_json_file(dir / "a.json", {{"x", 1}});
  CHECK(read_json_file(dir / "a.json").at("x") == 1);
  write_text_file(dir / "bad.json", "{");
  CHECK_THROWS_AS(read_json_file(dir / "bad.json"), Error);
  try {
    (void)read_text_file(dir / "missing.txt");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::io_error);
  }
  std::filesystem::remove_all(dir);
}
