#include "io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "error.hpp"

namespace dil {

using nlohmann::json;

namespace {

constexpr const char* kDatasetMagic = "#deinterleave-v1";
constexpr const char* kCheckpointFormat = "deinterleave-rnn-v1";

[[noreturn]] void parse_fail(std::size_t line, const std::string& msg) {
  throw Error(ErrorCode::parse_error, "line " + std::to_string(line) + ": " + msg);
}

std::uint64_t parse_uint(std::string_view text, std::size_t line, const char* what) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end) {
    parse_fail(line, std::string("bad ") + what + " '" + std::string(text) + "'");
  }
  return v;
}

std::uint64_t header_field(std::istringstream& hs, const std::string& key) {
  std::string tok;
  if (!(hs >> tok) || tok.rfind(key + "=", 0) != 0) parse_fail(1, "expected " + key + "=<value> in header");
  return parse_uint(std::string_view(tok).substr(key.size() + 1), 1, key.c_str());
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t tab = line.find('\t', pos);
    out.push_back(line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
    if (tab == std::string_view::npos) break;
    pos = tab + 1;
  }
  return out;
}

json table_to_json(const ProbTable& t) {
  json rows = json::array();
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const auto row = t.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

ProbTable table_from_json(const json& j, std::size_t rows, std::size_t cols, const char* name) {
  if (!j.is_array() || j.size() != rows) {
    throw Error(ErrorCode::parse_error, std::string(name) + ": expected " + std::to_string(rows) + " rows");
  }
  ProbTable t(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || row.size() != cols) {
      throw Error(ErrorCode::parse_error, std::string(name) + ": row " + std::to_string(r) + " must have " +
                                              std::to_string(cols) + " entries");
    }
    for (std::size_t c = 0; c < cols; ++c) t(r, c) = row[c].get<double>();
  }
  return t;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (j.at("rows").get<Eigen::Index>() != rows || j.at("cols").get<Eigen::Index>() != cols) {
    throw Error(ErrorCode::parse_error, std::string("checkpoint tensor ") + name + " has the wrong shape");
  }
  const auto& data = j.at("data");
  if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw Error(ErrorCode::parse_error, std::string("checkpoint tensor ") + name + " has the wrong size");
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
  }
  return m;
}

template <class Fn>
auto json_guard(Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, e.what());
  }
}

}  // namespace

void write_dataset(std::ostream& out, const LabeledSequence& seq) {
  out << kDatasetMagic << " m=" << seq.dims.m << " n=" << seq.dims.n << " q=" << seq.dims.q
      << " T=" << seq.size() << "\n";
  for (std::size_t t = 0; t < seq.size(); ++t) {
    const auto& s = seq.steps[t];
    out << t << '\t' << s.user << '\t' << s.request << '\t';
    if (seq.hidden_known) {
      out << s.page << '\t' << s.duration << '\n';
    } else {
      out << "-\t-\n";
    }
  }
}

LabeledSequence read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) parse_fail(1, "missing header");
  std::istringstream hs(line);
  std::string magic;
  hs >> magic;
  if (magic != kDatasetMagic) parse_fail(1, "expected header starting with " + std::string(kDatasetMagic));

  LabeledSequence seq;
  seq.dims.m = static_cast<std::uint32_t>(header_field(hs, "m"));
  seq.dims.n = static_cast<std::uint32_t>(header_field(hs, "n"));
  seq.dims.q = static_cast<std::uint32_t>(header_field(hs, "q"));
  const std::uint64_t T = header_field(hs, "T");
  std::string extra;
  if (hs >> extra) parse_fail(1, "unexpected header token '" + extra + "'");
  if (seq.dims.m == 0 || seq.dims.n == 0 || seq.dims.q == 0) parse_fail(1, "dimensions must be positive");

  seq.steps.reserve(T);
  bool any_hidden = false, any_withheld = false;
  for (std::uint64_t t = 0; t < T; ++t) {
    const std::size_t lineno = static_cast<std::size_t>(t) + 2;
    if (!std::getline(in, line)) parse_fail(lineno, "expected " + std::to_string(T) + " data lines");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto cols = split_tabs(line);
    if (cols.size() != 5) parse_fail(lineno, "expected 5 tab-separated columns");
    if (parse_uint(cols[0], lineno, "slot index") != t) parse_fail(lineno, "slot index out of sequence");
    LabeledStep s;
    s.user = static_cast<std::uint32_t>(parse_uint(cols[1], lineno, "user"));
    s.request = static_cast<std::uint32_t>(parse_uint(cols[2], lineno, "request"));
    if (s.user >= seq.dims.m) parse_fail(lineno, "user out of range");
    if (s.request >= seq.dims.n) parse_fail(lineno, "request out of range");
    if (cols[3] == "-" && cols[4] == "-") {
      any_withheld = true;
    } else {
      any_hidden = true;
      s.page = static_cast<std::uint32_t>(parse_uint(cols[3], lineno, "page"));
      s.duration = static_cast<std::uint32_t>(parse_uint(cols[4], lineno, "duration"));
      if (s.page >= seq.dims.n) parse_fail(lineno, "page out of range");
      if (s.duration < 1 || s.duration > seq.dims.q) parse_fail(lineno, "duration out of range");
    }
    if (any_hidden && any_withheld) parse_fail(lineno, "hidden labels must be given for all or no lines");
    seq.steps.push_back(s);
  }
  if (std::getline(in, line) && !line.empty()) parse_fail(static_cast<std::size_t>(T) + 2, "trailing data");
  seq.hidden_known = !any_withheld;
  return seq;
}

json scenario_to_json(const ScenarioParams& params) {
  json P = json::array(), pw = json::array(), O = json::array();
  for (const auto& model : params.models) {
    P.push_back(table_to_json(model.transition));
    pw.push_back(table_to_json(model.duration_dist));
    O.push_back(table_to_json(model.output));
  }
  json sched;
  if (params.sched.mode() == TurnScheduler::Mode::shares) {
    sched = {{"type", "shares"}, {"values", params.sched.shares()}};
  } else {
    sched = {{"type", "matrix"}, {"values", table_to_json(params.sched.turn_matrix())}};
  }
  return {{"m", params.dims.m}, {"n", params.dims.n}, {"q", params.dims.q},
          {"P", P},           {"pw", pw},           {"O", O},
          {"sched", sched}};
}

ScenarioParams scenario_from_json(const json& j) {
  return json_guard([&] {
    ScenarioParams params;
    params.dims = {j.at("m").get<std::uint32_t>(), j.at("n").get<std::uint32_t>(), j.at("q").get<std::uint32_t>()};
    const auto [m, n, q] = params.dims;
    if (m == 0 || n == 0 || q == 0) throw Error(ErrorCode::parse_error, "m, n and q must be positive");
    const auto& P = j.at("P");
    const auto& pw = j.at("pw");
    const auto& O = j.at("O");
    if (P.size() != m || pw.size() != m || O.size() != m) {
      throw Error(ErrorCode::parse_error, "P, pw and O must hold one matrix per user");
    }
    for (std::uint32_t u = 0; u < m; ++u) {
      params.models.push_back({table_from_json(P[u], n, n, "P"), table_from_json(pw[u], n, q, "pw"),
                               table_from_json(O[u], n, n, "O")});
    }
    const auto& sched = j.at("sched");
    const auto type = sched.at("type").get<std::string>();
    if (type == "shares") {
      params.sched = TurnScheduler::from_shares(sched.at("values").get<std::vector<double>>());
    } else if (type == "matrix") {
      params.sched = TurnScheduler::from_matrix(table_from_json(sched.at("values"), m, m, "sched"));
    } else {
      throw Error(ErrorCode::parse_error, "sched.type must be \"shares\" or \"matrix\"");
    }
    validate_scenario(params);
    return params;
  });
}

json checkpoint_to_json(const Checkpoint& ckpt) {
  const auto& c = ckpt.config;
  json config = {{"cell", c.cell == CellType::lstm ? "lstm" : "simple"},
                 {"hidden_size", c.hidden_size},
                 {"input_size", c.input_size},
                 {"output_size", c.output_size},
                 {"bptt_window", c.bptt_window},
                 {"learning_rate", c.learning_rate},
                 {"beta1", c.beta1},
                 {"beta2", c.beta2},
                 {"epsilon", c.epsilon},
                 {"max_epochs", c.max_epochs},
                 {"patience", c.patience},
                 {"init_scale", c.init_scale},
                 {"forget_bias", c.forget_bias}};
  json params = {{"wx", matrix_to_json(ckpt.params.wx)},
                 {"wh", matrix_to_json(ckpt.params.wh)},
                 {"b", matrix_to_json(ckpt.params.b)},
                 {"wu", matrix_to_json(ckpt.params.wu)}};
  return {{"format", kCheckpointFormat}, {"config", config}, {"params", params}};
}

Checkpoint checkpoint_from_json(const json& j) {
  return json_guard([&] {
    if (j.at("format").get<std::string>() != kCheckpointFormat) {
      throw Error(ErrorCode::parse_error, "unsupported checkpoint format");
    }
    Checkpoint ckpt;
    const auto& jc = j.at("config");
    auto& c = ckpt.config;
    const auto cell = jc.at("cell").get<std::string>();
    if (cell != "lstm" && cell != "simple") throw Error(ErrorCode::parse_error, "unknown cell type " + cell);
    c.cell = cell == "lstm" ? CellType::lstm : CellType::simple;
    c.hidden_size = jc.at("hidden_size").get<std::uint32_t>();
    c.input_size = jc.at("input_size").get<std::uint32_t>();
    c.output_size = jc.at("output_size").get<std::uint32_t>();
    c.bptt_window = jc.at("bptt_window").get<std::uint32_t>();
    c.learning_rate = jc.at("learning_rate").get<double>();
    c.beta1 = jc.at("beta1").get<double>();
    c.beta2 = jc.at("beta2").get<double>();
    c.epsilon = jc.at("epsilon").get<double>();
    c.max_epochs = jc.at("max_epochs").get<std::uint32_t>();
    c.patience = jc.at("patience").get<std::uint32_t>();
    c.init_scale = jc.at("init_scale").get<double>();
    c.forget_bias = jc.at("forget_bias").get<double>();
    validate_config(c);
    const Eigen::Index gh = static_cast<Eigen::Index>(c.gate_count()) * c.hidden_size;
    const auto& jp = j.at("params");
    ckpt.params.wx = matrix_from_json(jp.at("wx"), gh, c.input_size, "wx");
    ckpt.params.wh = matrix_from_json(jp.at("wh"), gh, c.hidden_size, "wh");
    ckpt.params.b = matrix_from_json(jp.at("b"), gh, 1, "b");
    ckpt.params.wu = matrix_from_json(jp.at("wu"), c.output_size, c.hidden_size, "wu");
    return ckpt;
  });
}

json report_to_json(const ExperimentReport& report, bool include_timing) {
  json configs = json::array();
  for (const auto& cfg : report.configs) {
    json methods = json::array();
    for (const auto& m : cfg.methods) {
      methods.push_back({{"name", m.name}, {"accuracies", m.accuracies}, {"mean", m.mean}, {"std", m.std}});
    }
    json jc = {{"label", cfg.label},
               {"seeds", cfg.seeds},
               {"methods", methods},
               {"nominal_baseline", cfg.nominal_baseline},
               {"empirical_baselines", cfg.empirical_baselines}};
    if (include_timing) jc["wall_clock_seconds"] = cfg.wall_clock_seconds;
    configs.push_back(std::move(jc));
  }
  json j = {{"experiment", report.experiment},
            {"mode", report.mode},
            {"scale", report.scale},
            {"seed", report.seed},
            {"initial_page_law", "uniform"},
            {"std_formula", "population"},
            {"configs", configs},
            {"table", render_table(report)}};
  if (include_timing) j["wall_clock_seconds"] = report.wall_clock_seconds;
  return j;
}

ExperimentReport report_from_json(const json& j) {
  return json_guard([&] {
    ExperimentReport r;
    r.experiment = j.at("experiment").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    r.scale = j.at("scale").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.wall_clock_seconds = j.value("wall_clock_seconds", 0.0);
    for (const auto& jc : j.at("configs")) {
      ConfigResult cfg;
      cfg.label = jc.at("label").get<std::string>();
      cfg.seeds = jc.at("seeds").get<std::vector<std::uint64_t>>();
      cfg.nominal_baseline = jc.at("nominal_baseline").get<double>();
      cfg.empirical_baselines = jc.at("empirical_baselines").get<std::vector<double>>();
      cfg.wall_clock_seconds = jc.value("wall_clock_seconds", 0.0);
      for (const auto& jm : jc.at("methods")) {
        cfg.methods.push_back({jm.at("name").get<std::string>(), jm.at("accuracies").get<std::vector<double>>(), jm.at("mean").get<double>(),
                               jm.at("std").get<double>()});
      }
      r.configs.push_back(std::move(cfg));
    }
    return r;
  });
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::io_error, "write failed for " + path.string());
}

json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::parse_error, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace dil
