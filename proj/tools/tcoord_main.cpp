#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "tcoord/analysis.hpp"
#include "tcoord/report.hpp"
#include "tcoord/scenario_io.hpp"
#include "tcoord/sim.hpp"
#include "tcoord/solver.hpp"
#include "tcoord/sweep.hpp"

namespace {

namespace fs = std::filesystem;

struct LoadedScenario {
  tcoord::Scenario scenario;
  std::string digest;
  std::string stem;
};

// Missing or malformed input is a usage problem (exit 2); semantic problems
// in well-formed files are domain errors (exit 1) and raised by validate().
LoadedScenario load(const std::string& path,
                    const std::vector<std::string>& overrides) {
  std::string text;
  try {
    text = tcoord::read_text_file(path);
  } catch (const std::exception& e) {
    throw tcoord::SchemaError(e.what());
  }
  LoadedScenario loaded{tcoord::scenario_from_json_text(text, overrides),
                        tcoord::scenario_digest(text),
                        fs::path(path).stem().string()};
  return loaded;
}

std::string default_out_dir() {
  const char* env = std::getenv("TCOORD_OUT_DIR");
  return env != nullptr && *env != '\0' ? env : ".";
}

double certificate_nu(const tcoord::Scenario& scenario) {
  return scenario.disturbance.kind == tcoord::DisturbanceModel::Kind::kNone
             ? 1.0
             : scenario.disturbance.nu;
}

// Largest per-mode infinity norm of the initial modal deviation/rate pairs,
// consensus direction excluded; this is the transient size the feasibility
// bound compares against.
double initial_modal_norm(const tcoord::SpectralDecomposition& spectral,
                          const tcoord::Scenario& scenario) {
  const Eigen::VectorXd delta0 = scenario.gamma0;  // t = 0
  const Eigen::VectorXd rate0 =
      scenario.gamma_rate0 - Eigen::VectorXd::Ones(scenario.gamma_rate0.size());
  const Eigen::VectorXd modal_delta = spectral.inverse * delta0;
  const Eigen::VectorXd modal_rate = spectral.inverse * rate0;
  double worst = 0.0;
  for (int i = 1; i < spectral.n(); ++i) {
    worst = std::max(worst,
                     std::max(std::abs(modal_delta(i)), std::abs(modal_rate(i))));
  }
  return worst;
}

int cmd_run(const std::string& path, const std::vector<std::string>& overrides,
            const std::string& out_dir) {
  const LoadedScenario loaded = load(path, overrides);
  const tcoord::Scenario& scenario = loaded.scenario;
  scenario.validate();

  std::optional<tcoord::ConvergenceCertificate> certificate;
  if (scenario.mpc.horizon == 1) {
    const auto spectral = tcoord::spectral_decomposition(scenario.topology);
    const tcoord::Gains g =
        tcoord::gains(scenario.mpc.weight_sync, scenario.mpc.weight_rate,
                      scenario.mpc.weight_effort, scenario.mpc.step);
    certificate = tcoord::certify(spectral, g, scenario.mpc.step,
                                  certificate_nu(scenario));
  }

  const tcoord::SimTrace trace = tcoord::run(scenario);

  fs::create_directories(out_dir);
  const std::string base =
      (fs::path(out_dir) /
       (scenario.name.empty() ? loaded.stem : scenario.name))
          .string();
  tcoord::RunReport report = tcoord::make_report(
      scenario, trace, loaded.digest,
      certificate ? &*certificate : nullptr);
  const std::string trace_path = base + "_trace.csv";
  const std::string timing_path = base + "_timing.json";
  const std::string gamma_path = base + "_gamma.svg";
  const std::string separation_path = base + "_separation.svg";
  const std::string summary_path = base + "_summary.json";
  tcoord::write_trace_csv(trace, trace_path);
  tcoord::write_timing_json(trace, timing_path);
  tcoord::write_gamma_plot(trace, gamma_path);
  tcoord::write_separation_plot(trace, separation_path);
  report.outputs = {trace_path, timing_path, gamma_path, separation_path,
                    summary_path};
  tcoord::write_summary_json(report, summary_path);

  if (report.consensus_seconds) {
    std::cout << "consensus time: " << *report.consensus_seconds << " s\n";
  } else {
    std::cout << "consensus time: not reached (epsilon "
              << report.consensus_epsilon << ")\n";
  }
  std::cout << "min separation: " << report.min_separation << " m\n";
  std::cout << "solve time: max " << report.solve.max_seconds << " s, mean "
            << report.solve.mean_seconds << " s\n";
  if (report.corridor) {
    std::cout << "corridor min distance: " << report.corridor->min_distance
              << " m" << (report.corridor->collision ? " (collision)" : "")
              << "\n";
  }
  for (const std::string& file : report.outputs) {
    std::cout << "wrote " << file << "\n";
  }
  if (trace.aborted) {
    std::cerr << "error: simulation aborted: " << trace.abort_reason << "\n";
    return 1;
  }
  return 0;
}

int cmd_certify(const std::string& path,
                const std::vector<std::string>& overrides, double nu_flag,
                double d_flag, double init_norm_flag) {
  const LoadedScenario loaded = load(path, overrides);
  const tcoord::Scenario& scenario = loaded.scenario;
  scenario.validate();
  const auto spectral = tcoord::spectral_decomposition(scenario.topology);

  nlohmann::json out;
  out["schema"] = 1;
  out["scenario"] = scenario.name;
  out["scenario_digest"] = loaded.digest;
  out["horizon"] = scenario.mpc.horizon;
  out["step"] = scenario.mpc.step;
  out["eigenvalues"] = std::vector<double>(
      spectral.eigenvalues.data(),
      spectral.eigenvalues.data() + spectral.n());

  const tcoord::Gains g =
      tcoord::gains(scenario.mpc.weight_sync, scenario.mpc.weight_rate,
                    scenario.mpc.weight_effort, scenario.mpc.step);
  if (scenario.mpc.horizon != 1) {
    std::cerr << "warning: decay certificates exist for horizon 1 only; "
                 "emitting per-mode spectral radii\n";
    std::vector<double> rho;
    for (const auto& mode :
         tcoord::mode_matrices(g, scenario.mpc.step, spectral)) {
      rho.push_back(tcoord::spectral_radius(mode));
    }
    rho[0] = 1.0;
    out["rho"] = rho;
    std::cout << out.dump(2) << "\n";
    return 0;
  }

  const double nu = nu_flag > 0.0 ? nu_flag : certificate_nu(scenario);
  const double d =
      d_flag >= 0.0
          ? d_flag
          : (scenario.disturbance.kind ==
                     tcoord::DisturbanceModel::Kind::kSynthetic
                 ? scenario.disturbance.magnitude
                 : 0.0);
  const double init_norm = init_norm_flag >= 0.0
                               ? init_norm_flag
                               : initial_modal_norm(spectral, scenario);

  const auto cert =
      tcoord::certify(spectral, g, scenario.mpc.step, nu);
  out["nu"] = cert.nu;
  out["margin"] = cert.margin;
  out["valid"] = cert.valid;
  out["rho"] = cert.rho;
  out["q"] = cert.q;
  out["exp_decay"] = cert.exp_decay;
  if (cert.valid) {
    out["decay_rate"] = cert.r_h;
    out["gelfand"] = cert.gelfand;
    out["gelfand_max"] = cert.gelfand_max;
    out["a1"] = cert.a1;
    out["a2"] = cert.a2;
    out["v_norm"] = cert.v_norm;
    out["v_inv_norm"] = cert.v_inv_norm;
    out["forcing_norm"] = cert.forcing_norm;
  } else {
    out["reason"] = cert.reason;
  }
  out["h_max"] = tcoord::h_max(spectral, scenario.mpc.weight_sync,
                               scenario.mpc.weight_rate,
                               scenario.mpc.weight_effort, nu);

  const tcoord::GammaBounds gamma_bounds =
      tcoord::derive_gamma_bounds(scenario.bounds);
  const auto margins = tcoord::feasibility_margins(
      cert, g, gamma_bounds, d, init_norm, scenario.n_agents());
  nlohmann::json f;
  f["valid"] = margins.valid;
  f["d"] = d;
  f["init_norm"] = init_norm;
  if (cert.valid) {
    f["s1"] = margins.s1;
    f["s2"] = margins.s2;
    f["eta_bound"] = margins.eta_bound;
    f["accel_margin"] = margins.accel_margin.size() > 0
                            ? margins.accel_margin.minCoeff()
                            : 0.0;
    f["rate_margin"] = margins.rate_margin.size() > 0
                           ? margins.rate_margin.minCoeff()
                           : 0.0;
    f["init_norm_limit"] = margins.nu_h;
    f["disturbance_limit"] = margins.d_h;
  }
  if (!margins.valid) {
    f["reason"] = margins.reason;
  }
  out["feasibility"] = f;
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_sweep(const std::string& path,
              const std::vector<std::string>& overrides,
              const std::string& out_dir, const tcoord::SweepGrid& grid,
              int jobs, bool assert_trends) {
  const LoadedScenario loaded = load(path, overrides);
  const tcoord::Scenario& scenario = loaded.scenario;
  scenario.validate();

  const tcoord::SweepResult result = tcoord::run_sweep(scenario, grid, jobs);
  const std::string table = tcoord::sweep_table_csv(result);
  fs::create_directories(out_dir);
  const std::string table_path =
      (fs::path(out_dir) /
       ((scenario.name.empty() ? loaded.stem : scenario.name) +
        "_sweep.csv"))
          .string();
  {
    std::ofstream out(table_path, std::ios::binary);
    if (!out) {
      throw std::runtime_error("cannot write " + table_path);
    }
    out << table;
  }
  std::cout << table;
  std::cout << "wrote " << table_path << "\n";

  if (assert_trends) {
    const std::vector<std::string> violations =
        tcoord::trend_violations(result);
    for (const std::string& v : violations) {
      std::cerr << "trend violation: " << v << "\n";
    }
    if (!violations.empty()) {
      return 1;
    }
    std::cout << "all trends hold\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Distributed time-coordination simulator: virtual-time consensus "
      "over communication graphs with per-agent receding-horizon control"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::vector<std::string> overrides;
  std::string out_dir = default_out_dir();

  CLI::App* run_cmd =
      app.add_subcommand("run", "Simulate a scenario and write its artifacts");
  run_cmd->add_option("scenario", scenario_path, "Scenario JSON file")
      ->required();
  run_cmd->add_option("--set", overrides,
                      "Override a scenario field, dotted.path=value");
  run_cmd->add_option("--out", out_dir,
                      "Output directory (default $TCOORD_OUT_DIR or .)");

  double nu_flag = -1.0;
  double d_flag = -1.0;
  double init_norm_flag = -1.0;
  CLI::App* certify_cmd = app.add_subcommand(
      "certify", "Emit the decay certificate and feasibility margins");
  certify_cmd->add_option("scenario", scenario_path, "Scenario JSON file")
      ->required();
  certify_cmd->add_option("--set", overrides,
                          "Override a scenario field, dotted.path=value");
  certify_cmd->add_option(
      "--nu", nu_flag,
      "Disturbance decay rate (default: scenario's, or 1.0)");
  certify_cmd->add_option(
      "--d", d_flag,
      "Disturbance magnitude bound (default: scenario's synthetic magnitude)");
  certify_cmd->add_option(
      "--init-norm", init_norm_flag,
      "Initial modal norm bound (default: computed from initial state)");

  tcoord::SweepGrid grid;
  int jobs = static_cast<int>(
      std::max(1u, std::thread::hardware_concurrency()));
  bool assert_trends = false;
  CLI::App* sweep_cmd = app.add_subcommand(
      "sweep", "Run a horizon/agent-count/step grid and aggregate metrics");
  sweep_cmd->add_option("scenario", scenario_path, "Scenario JSON file")
      ->required();
  sweep_cmd->add_option("--set", overrides,
                        "Override a scenario field, dotted.path=value");
  sweep_cmd->add_option("--out", out_dir,
                        "Output directory (default $TCOORD_OUT_DIR or .)");
  sweep_cmd->add_option("--horizons", grid.horizons,
                        "Prediction horizons to sweep")
      ->delimiter(',');
  sweep_cmd->add_option("--agents", grid.agent_counts,
                        "Agent counts to sweep (prefix of the scenario)")
      ->delimiter(',');
  sweep_cmd->add_option("--steps", grid.steps, "Replanning steps to sweep")
      ->delimiter(',');
  sweep_cmd->add_option("--jobs", jobs, "Worker threads")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_flag(
      "--assert-trends", assert_trends,
      "Fail unless consensus accelerates with horizon, does not slow with "
      "agent count, and small horizons solve faster than large ones");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run_cmd->parsed()) {
      return cmd_run(scenario_path, overrides, out_dir);
    }
    if (certify_cmd->parsed()) {
      return cmd_certify(scenario_path, overrides, nu_flag, d_flag,
                         init_norm_flag);
    }
    return cmd_sweep(scenario_path, overrides, out_dir, grid, jobs,
                     assert_trends);
  } catch (const tcoord::SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
