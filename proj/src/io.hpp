#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "experiments.hpp"
#include "interleaver.hpp"
#include "rnn.hpp"
#include "synthgen.hpp"

namespace dil {

// Dataset text format:
//   #deinterleave-v1 m=<m> n=<n> q=<q> T=<T>
//   t<TAB>user<TAB>request<TAB>page<TAB>duration      (one line per slot)
// page and duration are written as '-' when the hidden labels are withheld.
void write_dataset(std::ostream& out, const LabeledSequence& seq);
LabeledSequence read_dataset(std::istream& in);  // Error(parse_error) with line number

// Params JSON: {m, n, q, P: [m][n][n], pw: [m][n][q], O: [m][n][n],
//               sched: {type: "shares"|"matrix", values: [...]}}.
nlohmann::json scenario_to_json(const ScenarioParams& params);
ScenarioParams scenario_from_json(const nlohmann::json& j);

struct Checkpoint {
  RnnConfig config;
  RnnParams params;
};

// {"format": "deinterleave-rnn-v1", "config": {...},
//  "params": {"wx": {"rows", "cols", "data"}, "wh", "b", "wu"}} with row-major data.
nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const ExperimentReport& report, bool include_timing);
ExperimentReport report_from_json(const nlohmann::json& j);

// File helpers; Error(io_error) on open failure, Error(parse_error) on bad JSON.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace dil
