#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sosmap/estimator.hpp"
#include "sosmap/geometry.hpp"
#include "sosmap/phantom.hpp"

namespace sosmap {

struct SimulateSection {
  std::size_t n_samples = 2048;
  std::vector<PhantomSpec> phantoms;
};

struct EstimateSection {
  EstimationConfig cfg;
  double c0 = 1540.0;  // [m/s], constant initial map
};

// Parsed run configuration. File interfaces use mm / MHz with explicit unit
// suffixes in key names; everything here is SI.
struct RunConfig {
  ArrayGeometry geometry{32, 0.3e-3};
  PulseModel pulse;
  ImagingGrid grid{{-9.5e-3, 5e-3}, 20, 30, 1e-3, 1e-3};
  Seed seed;
  std::optional<SimulateSection> simulate;
  std::optional<EstimateSection> estimate;
};

// Loads and validates a JSON config file. Errors carry the offending key
// path (e.g. "simulate.phantoms[0].radius_mm"). See docs/formats.md for the
// schema.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text, const std::string& origin = "<string>");

// Canonical JSON snapshot of a parsed config with all defaults resolved
// (written into run manifests).
std::string config_echo_json(const RunConfig& config);

}  // namespace sosmap
