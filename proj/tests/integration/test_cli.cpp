#include "doctest.h"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "json.hpp"

#include "sosmap/report.hpp"

namespace fs = std::filesystem;

namespace {

std::string temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

int run_cli(const std::string& args, std::string* output = nullptr) {
  const std::string log = std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") +
                          "/sosmap_cli_log.txt";
  const std::string cmd = std::string(SOSMAP_CLI_PATH) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (output != nullptr) {
    std::ifstream is(log);
    std::stringstream ss;
    ss << is.rdbuf();
    *output = ss.str();
  }
  return WEXITSTATUS(status);
}

std::string file_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

const char* kMiniConfig = R"({
  "geometry": {"element_count": 8, "pitch_mm": 0.5},
  "pulse": {"center_frequency_mhz": 5.0, "sampling_frequency_mhz": 25.0,
            "fractional_bandwidth": 0.6, "pulse_cycles": 2.0},
  "grid": {"origin_mm": [-3.5, 4.0], "n_lateral": 8, "n_depth": 10,
           "spacing_lateral_mm": 1.0, "spacing_depth_mm": 1.0},
  "seed": 20240,
  "simulate": {"n_samples": 1024, "phantoms": [
    {"name": "p1510", "background_sos_mps": 1540, "scatterer_density_per_mm2": 1.5,
     "inclusions": [{"center_mm": [0.0, 8.0], "radius_mm": 2.5, "sos_mps": 1510}]},
    {"name": "p1600", "background_sos_mps": 1540, "scatterer_density_per_mm2": 1.5,
     "inclusions": [{"center_mm": [0.0, 8.0], "radius_mm": 2.5, "sos_mps": 1600}]}
  ]},
  "estimate": {"mode": "inr", "epochs": 4, "alpha": 0.01, "learning_rate": 0.001,
               "siren": {"hidden_layers": 2, "hidden_units": 16},
               "bmode_upsample": 1}
})";

std::string write_config(const std::string& dir, const char* text) {
  const std::string path = dir + "/config.json";
  std::ofstream os(path);
  os << text;
  return path;
}

}  // namespace

TEST_CASE("cli: simulate writes one directory per phantom, deterministically") {
  const std::string dir = temp_dir("sosmap_cli_sim");
  const std::string config = write_config(dir, kMiniConfig);

  CHECK(run_cli("simulate --config " + config + " --out " + dir + "/a") == 0);
  for (const char* phantom : {"p1510", "p1600"}) {
    const std::string pdir = dir + "/a/" + std::string(phantom);
    CHECK(fs::exists(pdir + "/channel_data.bin"));
    CHECK(fs::exists(pdir + "/channel_data.bin.meta.json"));
    CHECK(fs::exists(pdir + "/truth_sos.csv"));
    CHECK(fs::exists(pdir + "/manifest.json"));
    const auto manifest = nlohmann::json::parse(file_bytes(pdir + "/manifest.json"));
    CHECK(manifest.at("subcommand") == "simulate");
    CHECK(manifest.at("seed") == 20240);
  }

  CHECK(run_cli("simulate --config " + config + " --out " + dir + "/b") == 0);
  CHECK(file_bytes(dir + "/a/p1510/channel_data.bin") ==
        file_bytes(dir + "/b/p1510/channel_data.bin"));
  CHECK(file_bytes(dir + "/a/p1510/truth_sos.csv") ==
        file_bytes(dir + "/b/p1510/truth_sos.csv"));

  SUBCASE("a different seed changes the data") {
    CHECK(run_cli("simulate --config " + config + " --out " + dir + "/c --seed 99") == 0);
    CHECK(file_bytes(dir + "/a/p1510/channel_data.bin") !=
          file_bytes(dir + "/c/p1510/channel_data.bin"));
  }
}

TEST_CASE("cli: config errors name the key and leave no partial outputs") {
  const std::string dir = temp_dir("sosmap_cli_badcfg");
  const char* missing_pitch = R"({
    "geometry": {"element_count": 8},
    "grid": {"origin_mm": [-3.5, 4.0], "n_lateral": 8, "n_depth": 10,
             "spacing_lateral_mm": 1.0, "spacing_depth_mm": 1.0},
    "seed": 1,
    "simulate": {"phantoms": [{"name": "p"}]}
  })";
  const std::string config = write_config(dir, missing_pitch);
  std::string output;
  CHECK(run_cli("simulate --config " + config + " --out " + dir + "/out", &output) == 2);
  CHECK(output.find("geometry.pitch_mm") != std::string::npos);
  CHECK(!fs::exists(dir + "/out"));
}

TEST_CASE("cli: estimate runs both modes and is idempotent per seed") {
  const std::string dir = temp_dir("sosmap_cli_est");
  const std::string config = write_config(dir, kMiniConfig);
  REQUIRE(run_cli("simulate --config " + config + " --out " + dir + "/data") == 0);
  const std::string data = dir + "/data/p1510";

  const auto t0 = std::chrono::steady_clock::now();
  CHECK(run_cli("estimate --config " + config + " --data " + data + " --out " + dir + "/inr") == 0);
  const double smoke_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(smoke_seconds < 30.0);

  for (const char* name :
       {"sos_map.csv", "bmode.pgm", "loss_trace.csv", "cross_sections.csv", "metrics.json",
        "manifest.json"}) {
    CHECK(fs::exists(dir + "/inr/" + std::string(name)));
  }
  const auto metrics = nlohmann::json::parse(file_bytes(dir + "/inr/metrics.json"));
  CHECK(metrics.at("rmse_mps").get<double>() >= 0.0);
  CHECK(std::isfinite(metrics.at("rmse_mps").get<double>()));

  // loss trace length equals the configured epochs
  const auto trace = sosmap::read_loss_csv(dir + "/inr/loss_trace.csv");
  CHECK(trace.size() == 4);

  CHECK(run_cli("estimate --config " + config + " --data " + data + " --out " + dir +
                "/inr2") == 0);
  CHECK(file_bytes(dir + "/inr/sos_map.csv") == file_bytes(dir + "/inr2/sos_map.csv"));

  CHECK(run_cli("estimate --config " + config + " --data " + data + " --out " + dir +
                "/grid --mode grid_baseline") == 0);
  const auto grid_trace = sosmap::read_loss_csv(dir + "/grid/loss_trace.csv");
  CHECK(grid_trace.size() == 4);

  SUBCASE("thread count does not change the result") {
    CHECK(run_cli("estimate --config " + config + " --data " + data + " --out " + dir +
                  "/t1 --threads 1") == 0);
    CHECK(run_cli("estimate --config " + config + " --data " + data + " --out " + dir +
                  "/t3 --threads 3") == 0);
    CHECK(file_bytes(dir + "/t1/sos_map.csv") == file_bytes(dir + "/t3/sos_map.csv"));
    CHECK(file_bytes(dir + "/t1/loss_trace.csv") == file_bytes(dir + "/t3/loss_trace.csv"));
  }

  SUBCASE("epochs override shortens the run") {
    CHECK(run_cli("estimate --config " + config + " --data " + data + " --out " + dir +
                  "/e1 --epochs 1") == 0);
    CHECK(sosmap::read_loss_csv(dir + "/e1/loss_trace.csv").size() == 1);
  }
}

TEST_CASE("cli: evaluate recomputes metrics standalone") {
  const std::string dir = temp_dir("sosmap_cli_eval");
  const std::string config = write_config(dir, kMiniConfig);
  REQUIRE(run_cli("simulate --config " + config + " --out " + dir + "/data") == 0);
  const std::string truth = dir + "/data/p1510/truth_sos.csv";

  // estimate == truth -> rmse 0
  const std::string est_dir = dir + "/fake_estimate";
  fs::create_directories(est_dir);
  fs::copy_file(truth, est_dir + "/sos_map.csv");
  CHECK(run_cli("evaluate --estimate-dir " + est_dir + " --truth " + truth + " --out " + dir +
                "/m0") == 0);
  auto metrics = nlohmann::json::parse(file_bytes(dir + "/m0/metrics.json"));
  CHECK(metrics.at("rmse_mps").get<double>() == 0.0);

  // estimate = truth + 5 -> rmse 5, matching the in-process oracle
  const sosmap::SoSGrid ref = sosmap::read_map_csv(truth);
  std::vector<double> shifted = ref.values();
  for (double& v : shifted) v += 5.0;
  const sosmap::SoSGrid est(ref.grid(), shifted);
  sosmap::write_map_csv(est_dir + "/sos_map.csv", est);
  CHECK(run_cli("evaluate --estimate-dir " + est_dir + " --truth " + truth + " --out " + dir +
                "/m5") == 0);
  metrics = nlohmann::json::parse(file_bytes(dir + "/m5/metrics.json"));
  const sosmap::SoSGrid est_back = sosmap::read_map_csv(est_dir + "/sos_map.csv");
  CHECK(metrics.at("rmse_mps").get<double>() ==
        doctest::Approx(sosmap::rmse(est_back, ref)).epsilon(1e-12));
  CHECK(metrics.at("rmse_mps").get<double>() == doctest::Approx(5.0).epsilon(1e-4));
  CHECK(fs::exists(dir + "/m5/cross_sections.csv"));
}

TEST_CASE("cli: data-format and numeric failures use distinct exit codes") {
  const std::string dir = temp_dir("sosmap_cli_fail");
  const std::string config = write_config(dir, kMiniConfig);
  REQUIRE(run_cli("simulate --config " + config + " --out " + dir + "/data") == 0);
  const std::string data = dir + "/data/p1510";

  SUBCASE("corrupt container -> exit 3") {
    std::ofstream os(data + "/channel_data.bin", std::ios::binary);
    os << "THIS IS NOT A CONTAINER";
    os.close();
    std::string output;
    CHECK(run_cli("estimate --config " + config + " --data " + data + " --out " + dir + "/x",
                  &output) == 3);
    CHECK(output.find("bad magic") != std::string::npos);
  }

  SUBCASE("non-finite samples -> exit 4") {
    // patch one float payload sample to NaN
    std::fstream f(data + "/channel_data.bin",
                   std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(8 + 4 + 12 + 16 + 40);  // somewhere inside the payload
    const float nan_value = std::numeric_limits<float>::quiet_NaN();
    f.write(reinterpret_cast<const char*>(&nan_value), sizeof(nan_value));
    f.close();
    CHECK(run_cli("estimate --config " + config + " --data " + data + " --out " + dir + "/y") ==
          4);
  }

  SUBCASE("unknown mode -> exit 2") {
    CHECK(run_cli("estimate --config " + config + " --data " + data + " --out " + dir +
                  "/z --mode bogus") == 2);
  }
}
