#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "sosmap/config.hpp"
#include "sosmap/errors.hpp"
#include "sosmap/estimator.hpp"
#include "sosmap/parallel.hpp"
#include "sosmap/phantom.hpp"
#include "sosmap/report.hpp"
#include "sosmap/signal.hpp"
#include "sosmap/simulate.hpp"
#include "sosmap/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitFormat = 3;
constexpr int kExitNumeric = 4;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed_override;
  unsigned threads = 0;
};

void write_manifest(const std::string& dir, const std::string& subcommand,
                    const CommonArgs& args, const sosmap::RunConfig& config) {
  json manifest;
  manifest["tool"] = "sosmap";
  manifest["version"] = sosmap::kVersion;
  manifest["subcommand"] = subcommand;
  manifest["config_path"] = args.config_path;
  manifest["config"] = json::parse(sosmap::config_echo_json(config));
  manifest["output_dir"] = dir;
  manifest["seed"] = config.seed.value;
  manifest["threads"] = args.threads;
  const std::string path = dir + "/manifest.json";
  std::ofstream os(path);
  if (!os) throw sosmap::FormatError(path + ": cannot open for writing");
  os << manifest.dump(2) << "\n";
}

sosmap::RunConfig load_and_override(const CommonArgs& args) {
  sosmap::RunConfig config = sosmap::load_config(args.config_path);
  if (args.seed_override.has_value()) {
    config.seed.value = *args.seed_override;
    if (config.estimate.has_value()) config.estimate->cfg.seed = config.seed;
  }
  return config;
}

int cmd_simulate(const CommonArgs& args) {
  const sosmap::RunConfig config = load_and_override(args);
  if (!config.simulate.has_value()) {
    throw sosmap::ConfigError("config error at simulate: missing required key");
  }
  // Validate everything before touching the filesystem.
  std::vector<sosmap::SoSGrid> truths;
  std::vector<sosmap::ScattererField> fields;
  for (const sosmap::PhantomSpec& spec : config.simulate->phantoms) {
    truths.push_back(sosmap::phantom_to_sos_grid(spec, config.grid));
    fields.push_back(sosmap::sample_scatterers(spec, config.grid, config.seed));
  }

  for (std::size_t k = 0; k < config.simulate->phantoms.size(); ++k) {
    const sosmap::PhantomSpec& spec = config.simulate->phantoms[k];
    const sosmap::ChannelData rf = sosmap::simulate_rf(
        config.geometry, config.pulse, truths[k], fields[k], config.simulate->n_samples);

    const std::string dir = args.out_dir + "/" + spec.name;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw sosmap::FormatError(dir + ": cannot create directory: " + ec.message());

    json extra;
    extra["phantom"] = json::parse(sosmap::config_echo_json(config))["simulate"]["phantoms"][k];
    extra["geometry"] = json::parse(sosmap::config_echo_json(config))["geometry"];
    extra["seed"] = config.seed.value;
    sosmap::write_channel_data(dir + "/channel_data.bin", rf, extra.dump());
    sosmap::write_map_csv(dir + "/truth_sos.csv", truths[k]);
    write_manifest(dir, "simulate", args, config);
    std::cout << "wrote " << dir << " (" << rf.n_tx << "x" << rf.n_rx << "x" << rf.n_samples
              << " samples)\n";
  }
  return kExitOk;
}

int cmd_estimate(const CommonArgs& args, const std::string& data_dir,
                 const std::string& mode_override, int epochs_override) {
  sosmap::RunConfig config = load_and_override(args);
  if (!config.estimate.has_value()) {
    throw sosmap::ConfigError("config error at estimate: missing required key");
  }
  sosmap::EstimationConfig& cfg = config.estimate->cfg;
  if (!mode_override.empty()) {
    if (mode_override == "inr") {
      cfg.mode = sosmap::EstimationMode::inr;
    } else if (mode_override == "grid_baseline") {
      cfg.mode = sosmap::EstimationMode::grid_baseline;
    } else {
      throw sosmap::ConfigError("--mode: expected 'inr' or 'grid_baseline'");
    }
  }
  if (epochs_override > 0) cfg.epochs = epochs_override;
  cfg.validate();

  const sosmap::ChannelData rf = sosmap::read_channel_data(data_dir + "/channel_data.bin");
  if (rf.n_tx != config.geometry.element_count()) {
    throw sosmap::ConfigError("data has " + std::to_string(rf.n_tx) +
                              " channels but the config geometry has " +
                              std::to_string(config.geometry.element_count()));
  }
  const sosmap::SoSGrid reference = sosmap::read_map_csv(data_dir + "/truth_sos.csv");
  const sosmap::AnalyticChannelData iq = sosmap::analytic_signal(rf);
  const sosmap::SoSGrid c0(config.grid, config.estimate->c0);

  std::error_code ec;
  fs::create_directories(args.out_dir, ec);
  if (ec) throw sosmap::FormatError(args.out_dir + ": cannot create directory: " + ec.message());

  sosmap::CheckpointFn on_checkpoint;
  if (cfg.checkpoint_every > 0) {
    const std::string ckpt_dir = args.out_dir + "/checkpoints";
    fs::create_directories(ckpt_dir, ec);
    on_checkpoint = [ckpt_dir](const sosmap::EstimationSnapshot& snap) {
      char stem[64];
      std::snprintf(stem, sizeof(stem), "%s/epoch_%06d", ckpt_dir.c_str(), snap.epoch);
      sosmap::write_map_csv(std::string(stem) + "_sos.csv", snap.sos);
      if (snap.net != nullptr) {
        sosmap::write_checkpoint(std::string(stem) + "_net.bin", *snap.net);
      }
    };
  }

  try {
    const sosmap::EstimationResult result =
        sosmap::run_estimation(iq, config.geometry, c0, cfg, on_checkpoint);
    sosmap::emit_report(result, reference, args.out_dir, sosmap::config_echo_json(config));
    write_manifest(args.out_dir, "estimate", args, config);
    std::cout << "rmse " << sosmap::rmse(result.sos_map, reference) << " m/s, wall time "
              << result.wall_time_s << " s\n";
  } catch (const sosmap::EstimationAbort& abort) {
    // Diagnostics dump so the aborted state can be inspected.
    sosmap::write_map_csv(args.out_dir + "/diagnostics_map.csv", abort.map);
    std::ofstream os(args.out_dir + "/diagnostics.json");
    json diag;
    diag["error"] = abort.what();
    diag["epoch"] = abort.epoch;
    diag["grad_norm"] = abort.grad_norm;
    os << diag.dump(2) << "\n";
    throw;
  }
  return kExitOk;
}

int cmd_evaluate(const std::string& estimate_dir, const std::string& truth_path,
                 const std::string& out_dir) {
  const sosmap::SoSGrid estimate = sosmap::read_map_csv(estimate_dir + "/sos_map.csv");
  const sosmap::SoSGrid reference = sosmap::read_map_csv(truth_path);
  if (!(estimate.grid() == reference.grid())) {
    throw sosmap::FormatError("evaluate: estimate and truth grids have different dimensions");
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw sosmap::FormatError(out_dir + ": cannot create directory: " + ec.message());

  sosmap::EstimationResult shim{estimate, {}, sosmap::BModeImage{}, 0.0};
  const double whole = sosmap::rmse(estimate, reference);
  const double roi = sosmap::rmse_roi(estimate, reference);
  json metrics;
  metrics["rmse_mps"] = whole;
  if (std::isfinite(roi)) metrics["rmse_roi_mps"] = roi;
  const std::string metrics_path = out_dir + "/metrics.json";
  std::ofstream os(metrics_path);
  if (!os) throw sosmap::FormatError(metrics_path + ": cannot open for writing");
  os << metrics.dump(2) << "\n";

  const auto [lateral, longitudinal] =
      sosmap::cross_sections(estimate, reference, sosmap::reference_center(reference));
  sosmap::write_cross_sections_csv(out_dir + "/cross_sections.csv", lateral, longitudinal);

  std::cout << "rmse " << whole << " m/s\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speed-of-sound map estimation from synthetic-aperture ultrasound data"};
  app.set_version_flag("--version", std::string("sosmap ") + sosmap::kVersion);
  app.require_subcommand(1);

  CommonArgs sim_args, est_args;
  std::string data_dir, mode_override, estimate_dir, truth_path, eval_out;
  int epochs_override = 0;
  unsigned eval_threads = 0;

  CLI::App* sim = app.add_subcommand("simulate", "Generate synthetic channel data for each phantom in the config");
  sim->add_option("--config", sim_args.config_path, "JSON config file")->required();
  sim->add_option("--out", sim_args.out_dir, "Output directory (one subdirectory per phantom)")->required();
  sim->add_option("--seed", sim_args.seed_override, "Override the config seed");
  sim->add_option("--threads", sim_args.threads, "Worker thread cap (0 = hardware)");

  CLI::App* est = app.add_subcommand("estimate", "Optimize a SoS map for one recorded data directory");
  est->add_option("--config", est_args.config_path, "JSON config file")->required();
  est->add_option("--data", data_dir, "Data directory produced by 'simulate'")->required();
  est->add_option("--out", est_args.out_dir, "Report output directory")->required();
  est->add_option("--mode", mode_override, "Override estimate.mode (inr | grid_baseline)");
  est->add_option("--epochs", epochs_override, "Override estimate.epochs");
  est->add_option("--seed", est_args.seed_override, "Override the config seed");
  est->add_option("--threads", est_args.threads, "Worker thread cap (0 = hardware)");

  CLI::App* eval = app.add_subcommand("evaluate", "Recompute metrics for an existing estimate");
  eval->add_option("--estimate-dir", estimate_dir, "Directory containing sos_map.csv")->required();
  eval->add_option("--truth", truth_path, "Reference map CSV")->required();
  eval->add_option("--out", eval_out, "Metrics output directory")->required();
  eval->add_option("--threads", eval_threads, "Worker thread cap (0 = hardware)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (sim->parsed()) {
      sosmap::set_max_threads(sim_args.threads);
      return cmd_simulate(sim_args);
    }
    if (est->parsed()) {
      sosmap::set_max_threads(est_args.threads);
      return cmd_estimate(est_args, data_dir, mode_override, epochs_override);
    }
    if (eval->parsed()) {
      sosmap::set_max_threads(eval_threads);
      return cmd_evaluate(estimate_dir, truth_path, eval_out);
    }
  } catch (const sosmap::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const sosmap::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const sosmap::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
