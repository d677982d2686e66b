#include "memlq/config.h"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace memlq {

using nlohmann::json;

namespace {

Eigen::MatrixXd MatrixFromRows(const json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw std::invalid_argument(std::string(what) +
                                " must be an array of rows");
  }
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  Eigen::MatrixXd M(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols) {
      throw std::invalid_argument(std::string(what) + " has ragged rows");
    }
    for (int c = 0; c < cols; ++c) M(r, c) = j[r][c].get<double>();
  }
  return M;
}

MemoryKernel ParseKernel(const json& j) {
  if (j.is_null()) return MemoryKernel::Zero();
  const std::string form = j.value("form", "zero");
  if (form == "zero") return MemoryKernel::Zero();
  if (form == "exponential" || form == "scalar-exponential") {
    return MemoryKernel::ScalarExponential(j.value("a", 1.0), j.value("b", 0.0));
  }
  if (form == "scalar-table") {
    return MemoryKernel::ScalarTable(j.at("samples").get<std::vector<double>>(),
                                     j.at("h").get<double>());
  }
  if (form == "matrix-table") {
    std::vector<Eigen::MatrixXd> samples;
    for (const auto& s : j.at("samples")) {
      samples.push_back(MatrixFromRows(s, "kernel sample"));
    }
    return MemoryKernel::MatrixTable(std::move(samples), j.at("h").get<double>());
  }
  throw std::invalid_argument("unknown kernel form '" + form + "'");
}

// Converts a byte offset into "line L, column C".
std::string Where(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

ControlSystem parse_model(const json& j) {
  const std::string kind = j.value("model", "heat");
  const double T = j.value("T", 1.0);
  MemoryKernel kernel = ParseKernel(j.contains("kernel") ? j["kernel"] : json());
  std::optional<Eigen::MatrixXd> C;
  if (j.contains("C")) {
    if (j["C"].is_string()) {
      if (j["C"] != "identity" && j["C"] != "zero") {
        throw std::invalid_argument("C must be \"identity\", \"zero\" or a matrix");
      }
    } else {
      C = MatrixFromRows(j["C"], "C");
    }
  }
  ControlSystem sys;
  if (kind == "heat") {
    const int n = j.value("n", 8);
    sys = build_heat_model(n, kernel, T);
  } else if (kind == "explicit") {
    sys.A = MatrixFromRows(j.at("A"), "A");
    sys.B = MatrixFromRows(j.at("B"), "B");
    sys.C = Eigen::MatrixXd::Identity(sys.A.rows(), sys.A.rows());
    sys.kernel = kernel;
    sys.T = T;
    sys.gamma = j.value("gamma", 0.75);
  } else {
    throw std::invalid_argument("model must be \"heat\" or \"explicit\"");
  }
  if (C) sys.C = *C;
  if (j.contains("C") && j["C"] == "zero") sys.C.setZero();
  return sys;
}

InitialSpec parse_initial(const json& j) {
  InitialSpec spec;
  spec.s = j.value("s", 0.0);
  spec.w0 = j.at("w0").get<std::vector<double>>();
  if (j.contains("eta")) {
    if (j["eta"].is_number()) {
      spec.eta_value = j["eta"].get<double>();
    } else {
      spec.eta = j["eta"].get<std::vector<std::vector<double>>>();
    }
  }
  return spec;
}

RunConfig parse_run_config(const json& j) {
  RunConfig cfg;
  cfg.sys = parse_model(j);
  cfg.model_kind = j.value("model", "heat");
  cfg.N = j.value("N", 64);
  if (j.contains("initial")) {
    const auto& ini = j["initial"];
    if (ini.is_array()) {
      for (const auto& e : ini) cfg.initial.push_back(parse_initial(e));
    } else {
      cfg.initial.push_back(parse_initial(ini));
    }
  }
  if (cfg.initial.empty()) {
    InitialSpec spec;
    spec.w0.assign(cfg.sys.n(), 0.0);
    spec.w0[0] = 1.0;
    cfg.initial.push_back(spec);
  }
  cfg.levels = j.value("levels", std::vector<int>{});
  cfg.tol = j.value("tol", cfg.tol);
  cfg.max_iter = j.value("max_iter", cfg.max_iter);
  cfg.window = j.value("window", cfg.window);
  cfg.seed = j.value("seed", cfg.seed);
  // Grid invariant is checked eagerly so bad configs fail at load time.
  TimeGrid grid = cfg.grid();
  cfg.sys.Validate(grid.h());
  for (const auto& spec : cfg.initial) cfg.state_point(spec);
  if (!(cfg.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  return cfg;
}

StatePoint RunConfig::state_point(const InitialSpec& spec) const {
  return state_point(spec, grid());
}

StatePoint RunConfig::state_point(const InitialSpec& spec,
                                  const TimeGrid& g) const {
  StatePoint x;
  x.s_index = g.index_of(spec.s);
  if (x.s_index >= g.N()) throw std::invalid_argument("s must be < T");
  x.w0 = Eigen::Map<const Eigen::VectorXd>(spec.w0.data(), spec.w0.size());
  const int m = sys.m();
  if (spec.eta_value || spec.eta.empty()) {
    const double v = spec.eta_value.value_or(0.0);
    x.eta.assign(x.s_index, Eigen::VectorXd::Constant(m, v));
  } else {
    // History rows are given per interval of the configured grid; on a
    // refined grid each row is held over the corresponding sub-intervals.
    const int rows = static_cast<int>(spec.eta.size());
    if (x.s_index % rows != 0) {
      throw std::invalid_argument("eta rows do not match s on this grid");
    }
    const int rep = x.s_index / rows;
    for (int j = 0; j < x.s_index; ++j) {
      const auto& r = spec.eta[j / rep];
      x.eta.push_back(Eigen::Map<const Eigen::VectorXd>(r.data(), r.size()));
    }
  }
  x.Validate(sys.n(), m);
  return x;
}

json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(origin + ": " + Where(text, e.byte) + ": " +
                                e.what());
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path);
}

json default_config_json() {
  return json{
      {"model", "heat"},
      {"n", 8},
      {"kernel", {{"form", "exponential"}, {"a", 0.5}, {"b", 1.0}}},
      {"C", "identity"},
      {"T", 1.0},
      {"N", 64},
      {"initial",
       json::array({json{{"s", 0.0}, {"w0", {1, 0, 0, 0, 0, 0, 0, 0}}},
                    json{{"s", 0.25},
                         {"w0", {1, 0, 0, 0, 0, 0, 0, 0}},
                         {"eta", 0.5}}})},
      {"levels", {32, 64, 128}},
  };
}

}  // namespace memlq
