#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "memlq/model.h"

namespace memlq {

/// Initial datum as written in JSON: s is a time, eta either one row per
/// interval of [0, s) or a single number for a constant history.
struct InitialSpec {
  double s{0.0};
  std::vector<double> w0;
  std::vector<std::vector<double>> eta;
  std::optional<double> eta_value;
};

struct RunConfig {
  ControlSystem sys;
  std::string model_kind{"heat"};
  int N{64};
  std::vector<InitialSpec> initial;
  std::vector<int> levels;
  double tol{1e-10};
  int max_iter{200};
  int window{4};
  unsigned seed{12345};
  std::string out_dir{"."};

  TimeGrid grid() const { return TimeGrid(sys.T, N); }
  /// Resolves an initial datum on the configured grid.
  StatePoint state_point(const InitialSpec& spec) const;
  StatePoint state_point(const InitialSpec& spec, const TimeGrid& grid) const;
};

/// Builds the model part of a configuration. Throws std::invalid_argument.
ControlSystem parse_model(const nlohmann::json& j);
InitialSpec parse_initial(const nlohmann::json& j);
RunConfig parse_run_config(const nlohmann::json& j);

/// Reads a JSON file. Parse errors are rethrown with line and column.
nlohmann::json read_json_file(const std::string& path);
/// Parses JSON text; `origin` names the source in error messages.
nlohmann::json parse_json_text(const std::string& text,
                               const std::string& origin);

/// The default heat configuration: 8 modes, k(t) = 0.5 e^{-t} I, C = I,
/// T = 1, N = 64, w0 = e1, s in {0, T/4} with η ≡ 0.5.
nlohmann::json default_config_json();

}  // namespace memlq
