// Command-line front end: model checks, solves, simulations and the
// verification harnesses.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "memlq/closedloop.h"
#include "memlq/config.h"
#include "memlq/harness.h"
#include "memlq/openloop.h"
#include "memlq/riccati.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::string config;
  std::string out{"."};
  double tol{0.0};
  long long seed{-1};
};

memlq::RunConfig LoadConfig(const Globals& g) {
  json j = g.config.empty() ? memlq::default_config_json()
                            : memlq::read_json_file(g.config);
  memlq::RunConfig cfg = memlq::parse_run_config(j);
  if (g.tol > 0.0) cfg.tol = g.tol;
  if (g.seed >= 0) cfg.seed = static_cast<unsigned>(g.seed);
  cfg.out_dir = g.out;
  fs::create_directories(cfg.out_dir);
  return cfg;
}

memlq::StatePoint PickInitial(const memlq::RunConfig& cfg,
                              const std::string& path) {
  if (!path.empty()) {
    return cfg.state_point(memlq::parse_initial(memlq::read_json_file(path)));
  }
  return cfg.state_point(cfg.initial.front());
}

void WriteJson(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

std::string Path(const memlq::RunConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out_dir) / name).string();
}

memlq::RiccatiTriplet SolveTriplet(const memlq::RunConfig& cfg,
                                   const memlq::PropagatorTables& tab,
                                   memlq::RiccatiMethod method) {
  using memlq::RiccatiMethod;
  switch (method) {
    case RiccatiMethod::kQuadratureV1:
    case RiccatiMethod::kQuadratureV2:
      return memlq::riccati_by_quadrature(tab, method);
    case RiccatiMethod::kBackward:
      return memlq::riccati_backward(cfg.sys, tab);
    case RiccatiMethod::kPicard: {
      memlq::PicardOptions po;
      po.window = cfg.window;
      po.tol = cfg.tol;
      po.max_iter = cfg.max_iter;
      return memlq::riccati_picard(cfg.sys, tab, po).triplet;
    }
  }
  throw std::logic_error("unknown method");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LQ optimal control for evolutions with input memory"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "model/run configuration (JSON)");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--tol", g.tol, "solver tolerance");
  app.add_option("--seed", g.seed, "seed for randomized checks");

  auto* model = app.add_subcommand("model", "model utilities");
  auto* model_check = model->add_subcommand("check", "validate the model");
  model->require_subcommand(1);

  auto* solve = app.add_subcommand("solve", "solvers");
  solve->require_subcommand(1);
  std::string initial_path;
  auto* open_loop = solve->add_subcommand("open-loop", "optimality-condition solve");
  open_loop->add_option("--initial", initial_path, "initial datum (JSON)");
  auto* riccati = solve->add_subcommand("riccati", "operator triplet");
  std::string method = "quadrature-v2";
  bool residuals = false;
  riccati->add_option("--method", method, "quadrature-v1|quadrature-v2|backward|picard")
      ->check(CLI::IsMember({"quadrature-v1", "quadrature-v2", "backward", "picard"}));
  riccati->add_flag("--residuals", residuals, "append the DRE residual report");

  auto* simulate = app.add_subcommand("simulate", "simulations");
  simulate->require_subcommand(1);
  auto* closed = simulate->add_subcommand("closed-loop", "feedback simulation");
  std::string triplet_path;
  closed->add_option("--triplet", triplet_path, "triplet JSON (default: quadrature-v2)");
  closed->add_option("--initial", initial_path, "initial datum (JSON)");

  auto* verify = app.add_subcommand("verify", "run the invariant suite");
  auto* convergence = app.add_subcommand("convergence", "refinement sweep");
  std::vector<int> levels;
  convergence->add_option("--levels", levels, "grid sizes, e.g. 32 64 128")
      ->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    const memlq::RunConfig cfg = LoadConfig(g);
    const memlq::TimeGrid grid = cfg.grid();

    if (model_check->parsed()) {
      const auto& s = cfg.sys;
      json rep = {{"n", s.n()}, {"m", s.m()}, {"p", s.p()}, {"T", s.T},
                  {"N", grid.N()}, {"h", grid.h()}, {"gamma", s.gamma},
                  {"eigen", s.eigen.has_value()},
                  {"kernel_zero", s.kernel.is_zero()}, {"valid", true}};
      std::cout << rep.dump(2) << "\n";
      return 0;
    }

    const memlq::PropagatorTables tab = memlq::build_tables(cfg.sys, grid);

    if (open_loop->parsed()) {
      const memlq::StatePoint x0 = PickInitial(cfg, initial_path);
      const memlq::OpenLoopResult r = memlq::solve_open_loop(tab, x0);
      memlq::write_trajectory_csv(Path(cfg, "control.csv"), grid, r.u, 'u');
      memlq::write_trajectory_csv(Path(cfg, "state.csv"), grid, r.w, 'x');
      json rep = {{"cost", r.cost}, {"lambda_min", r.lambda_min}};
      WriteJson(Path(cfg, "open_loop.json"), rep);
      std::cout << rep.dump(2) << "\n";
      return 0;
    }

    if (riccati->parsed()) {
      const auto m = memlq::parse_riccati_method(method);
      const memlq::RiccatiTriplet trip = SolveTriplet(cfg, tab, m);
      json j = memlq::triplet_to_json(trip);
      json summary = {{"method", method}, {"N", grid.N()}};
      if (m == memlq::RiccatiMethod::kQuadratureV2) {
        summary["p1_route_gap"] = trip.p1_route_gap;
      }
      if (residuals) {
        j["residuals"] = memlq::residual_to_json(
            memlq::dre_residual(cfg.sys, tab, trip));
        summary["residuals"] = j["residuals"];
      }
      const std::string path = Path(cfg, "triplet_" + method + ".json");
      std::ofstream(path) << j.dump() << "\n";
      summary["file"] = path;
      std::cout << summary.dump(2) << "\n";
      return 0;
    }

    if (closed->parsed()) {
      const memlq::StatePoint x0 = PickInitial(cfg, initial_path);
      const memlq::RiccatiTriplet trip =
          triplet_path.empty()
              ? memlq::riccati_by_quadrature(tab, memlq::RiccatiMethod::kQuadratureV2)
              : memlq::triplet_from_json(memlq::read_json_file(triplet_path));
      if (trip.N() != grid.N()) {
        throw std::invalid_argument("triplet grid differs from the config grid");
      }
      const memlq::GainTables gains = memlq::build_gains(cfg.sys, trip);
      const memlq::FeedbackRun fb = memlq::simulate_closed_loop(tab, gains, x0);
      const memlq::OpenLoopResult ol = memlq::solve_open_loop(tab, x0);
      double gap = 0.0;
      for (int j = 0; j < fb.u.size(); ++j) {
        gap = std::max(gap, (fb.u.values[j] - ol.u.values[j]).cwiseAbs().maxCoeff());
      }
      memlq::write_trajectory_csv(Path(cfg, "control_fb.csv"), grid, fb.u, 'u');
      memlq::write_trajectory_csv(Path(cfg, "state_fb.csv"), grid, fb.w, 'x');
      json rep = {{"cost_fb", memlq::cost_eval(tab, x0, fb.u)},
                  {"cost_ol", ol.cost},
                  {"sup_control_gap", gap}};
      WriteJson(Path(cfg, "closed_loop.json"), rep);
      std::cout << rep.dump(2) << "\n";
      return 0;
    }

    if (verify->parsed()) {
      const auto checks = memlq::run_verify(cfg);
      const json rep = memlq::checks_to_json(checks);
      WriteJson(Path(cfg, "verify.json"), rep);
      for (const auto& c : checks) {
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << "  " << c.detail
                  << "\n";
      }
      return rep["pass"].get<bool>() ? 0 : 1;
    }

    if (convergence->parsed()) {
      const std::vector<int> lv = levels.empty() ? cfg.levels : levels;
      const std::string csv = memlq::run_convergence(
          cfg, lv.empty() ? std::vector<int>{grid.N()} : lv);
      std::ofstream(Path(cfg, "convergence.csv")) << csv;
      std::cout << csv;
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
