#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include "femu/harness.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::string format = "json";
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config_path, "scenario configuration file (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  args.seed_opt = sub->add_option("--seed", args.seed, "override the config random seed");
  sub->add_option("--out", args.out_dir, "output directory (created if missing)");
  sub->add_option("--format", args.format, "measurement file format")
      ->check(CLI::IsMember({"json", "csv"}));
}

femu::ScenarioConfig load(const CommonArgs& args) {
  femu::ScenarioConfig cfg = femu::load_config(args.config_path);
  if (args.seed_opt && *args.seed_opt) cfg.seed = args.seed;
  fs::create_directories(args.out_dir);
  return cfg;
}

std::string out_path(const CommonArgs& args, const std::string& name) {
  return (fs::path(args.out_dir) / name).string();
}

int run_simulate(const CommonArgs& args) {
  const femu::ScenarioConfig cfg = load(args);
  const auto model = femu::build_model(cfg);
  const femu::SynthResult synth =
      femu::synth_measurements(*model, femu::true_alpha(cfg), cfg.noise, cfg.seed,
                               cfg.measured_modes, cfg.retained_modes);
  std::string path;
  if (args.format == "csv") {
    path = out_path(args, "measurements.csv");
    femu::write_text_file(
        path, femu::measured_to_csv(synth.measured, synth.freq_std_hz, model->sensor_coords));
  } else {
    path = out_path(args, "measurements.json");
    femu::write_text_file(
        path,
        femu::measured_to_json(synth.measured, synth.freq_std_hz, model->sensor_coords).dump(2) +
            "\n");
  }
  std::cout << "wrote " << path << " (" << synth.measured.mode_count() << " modes, "
            << synth.measured.sensor_count() << " sensors)\n";
  return 0;
}

int run_update(const CommonArgs& args, const std::string& measurements_path) {
  const femu::ScenarioConfig cfg = load(args);

  femu::MeasuredModal external;
  const femu::MeasuredModal* external_ptr = nullptr;
  if (!measurements_path.empty()) {
    const std::string text = femu::read_text_file(measurements_path);
    external = measurements_path.ends_with(".csv")
                   ? femu::measured_from_csv(text)
                   : femu::measured_from_json(femu::json::parse(text));
    external_ptr = &external;
  }

  const femu::RunReport report = femu::run_scenario(cfg, external_ptr);

  femu::write_text_file(out_path(args, "report.json"), report.to_json().dump(2) + "\n");
  femu::write_text_file(out_path(args, "damage_indices.csv"), femu::plot_csv(report));
  if (!report.lcurve.points.empty()) {
    femu::write_text_file(out_path(args, "lcurve.csv"), femu::lcurve_csv(report.lcurve));
  }

  std::cout << "status: " << femu::to_string(report.status) << " (" << report.reason << ")\n"
            << "iterations: " << report.iterations << "\n"
            << "lambda: " << report.lambda_used << " [" << report.lambda_rule << "]\n"
            << "data fit: " << report.data_fit << "  penalty: " << report.penalty << "\n"
            << "max damage index: "
            << (report.recovered_damage.size() ? report.recovered_damage.maxCoeff() : 0.0)
            << "\n"
            << "wrote " << out_path(args, "report.json") << "\n";
  return report.status == femu::ConvergenceStatus::failed ? 1 : 0;
}

int run_lcurve(const CommonArgs& args) {
  const femu::ScenarioConfig cfg = load(args);
  const auto model = femu::build_model(cfg);
  const femu::SynthResult synth =
      femu::synth_measurements(*model, femu::true_alpha(cfg), cfg.noise, cfg.seed,
                               cfg.measured_modes, cfg.retained_modes);
  const femu::UpdateProblem problem = femu::make_problem(cfg, model, synth.measured);
  const std::vector<double> grid = femu::default_lambda_grid(
      cfg.lcurve_min, cfg.lcurve_max, cfg.lcurve_points_per_decade);
  const femu::LCurve curve = femu::lcurve_sweep(problem, grid, cfg.solver);
  const femu::CornerResult corner = femu::lcurve_corner(curve);

  femu::json j;
  femu::json pts = femu::json::array();
  for (const auto& p : curve.points) {
    pts.push_back({{"lambda", p.lambda_reg},
                   {"data_fit", p.data_fit},
                   {"penalty", p.penalty},
                   {"ok", p.ok}});
  }
  j["points"] = pts;
  j["corner"] = {{"found", corner.found},
                 {"lambda", corner.lambda_star},
                 {"curvature", corner.curvature}};
  femu::write_text_file(out_path(args, "lcurve.json"), j.dump(2) + "\n");
  femu::write_text_file(out_path(args, "lcurve.csv"), femu::lcurve_csv(curve));

  if (corner.found) {
    std::cout << "corner: lambda = " << corner.lambda_star
              << " (curvature " << corner.curvature << ")\n";
  } else {
    std::cout << "no corner above the curvature threshold (max curvature "
              << corner.curvature << "); pick lambda around the knee manually\n";
  }
  std::cout << "wrote " << out_path(args, "lcurve.json") << "\n";
  return 0;
}

int run_check(const CommonArgs& args) {
  const femu::ScenarioConfig cfg = load(args);
  const femu::json report = femu::check_derivatives(cfg);
  femu::write_text_file(out_path(args, "derivative_check.json"), report.dump(2) + "\n");
  for (const auto& e : report.at("checks")) {
    std::cout << (e.at("pass").get<bool>() ? "[pass] " : "[FAIL] ")
              << e.at("name").get<std::string>()
              << "  max_rel_error=" << e.at("max_rel_error").get<double>()
              << "  threshold=" << e.at("threshold").get<double>();
    if (e.at("skipped").get<int>() > 0) {
      std::cout << "  skipped=" << e.at("skipped").get<int>();
    }
    std::cout << "\n";
  }
  std::cout << "all_pass: " << (report.at("all_pass").get<bool>() ? "true" : "false") << "\n"
            << "wrote " << out_path(args, "derivative_check.json") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sensitivity-based FE model updating with total-variation and "
               "interpolation regularization"};
  app.require_subcommand(1);

  CommonArgs sim_args, upd_args, lc_args, chk_args;
  std::string measurements_path;

  CLI::App* sim = app.add_subcommand("simulate", "emit a synthetic measured-modal file");
  add_common(sim, sim_args);

  CLI::App* upd = app.add_subcommand("update", "run a model-updating scenario");
  add_common(upd, upd_args);
  upd->add_option("--measurements", measurements_path,
                  "measured-modal file (JSON or CSV) overriding synthetic data")
      ->check(CLI::ExistingFile);

  CLI::App* lc = app.add_subcommand("lcurve", "sweep lambda and locate the L-curve corner");
  add_common(lc, lc_args);

  CLI::App* chk = app.add_subcommand("check", "finite-difference derivative report");
  add_common(chk, chk_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return run_simulate(sim_args);
    if (upd->parsed()) return run_update(upd_args, measurements_path);
    if (lc->parsed()) return run_lcurve(lc_args);
    if (chk->parsed()) return run_check(chk_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
