#include "sosmap/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "sosmap/errors.hpp"

namespace sosmap {

namespace {

using nlohmann::json;

// Read-only cursor keeping the key path for error messages.
class Cursor {
 public:
  Cursor(const json& node, std::string path) : node_(&node), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& raw() const { return *node_; }

  bool has(const std::string& key) const { return node_->is_object() && node_->contains(key); }

  Cursor at(const std::string& key) const {
    if (!node_->is_object() || !node_->contains(key)) {
      throw ConfigError("config error at " + join(key) + ": missing required key");
    }
    return {(*node_)[key], join(key)};
  }

  Cursor item(std::size_t index) const {
    return {(*node_)[index], path_ + "[" + std::to_string(index) + "]"};
  }

  std::size_t array_size() const {
    if (!node_->is_array()) {
      throw ConfigError("config error at " + path_ + ": expected an array");
    }
    return node_->size();
  }

  double number() const {
    if (!node_->is_number()) {
      throw ConfigError("config error at " + path_ + ": expected a number");
    }
    return node_->get<double>();
  }

  double number_or(const std::string& key, double fallback) const {
    return has(key) ? at(key).number() : fallback;
  }

  long long integer() const {
    if (!node_->is_number_integer()) {
      throw ConfigError("config error at " + path_ + ": expected an integer");
    }
    return node_->get<long long>();
  }

  long long integer_or(const std::string& key, long long fallback) const {
    return has(key) ? at(key).integer() : fallback;
  }

  std::string text() const {
    if (!node_->is_string()) {
      throw ConfigError("config error at " + path_ + ": expected a string");
    }
    return node_->get<std::string>();
  }

  Vec2 point_mm() const {
    if (!node_->is_array() || node_->size() != 2) {
      throw ConfigError("config error at " + path_ + ": expected [x_mm, z_mm]");
    }
    return {item(0).number() * 1e-3, item(1).number() * 1e-3};
  }

 private:
  std::string join(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* node_;
  std::string path_;
};

PhantomSpec parse_phantom(const Cursor& c, const ImagingGrid& grid) {
  PhantomSpec spec;
  spec.name = c.has("name") ? c.at("name").text() : "phantom";
  spec.background_sos = c.number_or("background_sos_mps", 1540.0);
  spec.scatterer_density = c.number_or("scatterer_density_per_mm2", 2.0);
  if (c.has("inclusions")) {
    const Cursor incs = c.at("inclusions");
    for (std::size_t k = 0; k < incs.array_size(); ++k) {
      const Cursor ic = incs.item(k);
      Inclusion inc;
      inc.center = ic.at("center_mm").point_mm();
      inc.radius = ic.at("radius_mm").number() * 1e-3;
      inc.sos = ic.at("sos_mps").number();
      spec.inclusions.push_back(inc);
    }
  }
  try {
    spec.validate(grid);
  } catch (const ConfigError& e) {
    throw ConfigError("config error at " + c.path() + ": " + e.what());
  }
  return spec;
}

}  // namespace

RunConfig parse_config(const std::string& json_text, const std::string& origin) {
  json root = json::parse(json_text, nullptr, false);
  if (root.is_discarded()) {
    throw ConfigError(origin + ": not valid JSON");
  }
  const Cursor c(root, "");

  RunConfig config;

  const Cursor geom = c.at("geometry");
  config.geometry = ArrayGeometry(
      static_cast<std::size_t>(geom.at("element_count").integer()),
      geom.at("pitch_mm").number() * 1e-3);

  if (c.has("pulse")) {
    const Cursor pulse = c.at("pulse");
    config.pulse.center_frequency = pulse.number_or("center_frequency_mhz", 5.0) * 1e6;
    config.pulse.sampling_frequency = pulse.number_or("sampling_frequency_mhz", 25.0) * 1e6;
    config.pulse.fractional_bandwidth = pulse.number_or("fractional_bandwidth", 0.6);
    config.pulse.pulse_cycles = pulse.number_or("pulse_cycles", 2.0);
  }
  try {
    config.pulse.validate();
  } catch (const ConfigError& e) {
    throw ConfigError("config error at pulse: " + std::string(e.what()));
  }

  const Cursor grid = c.at("grid");
  config.grid = ImagingGrid(grid.at("origin_mm").point_mm(),
                            static_cast<std::size_t>(grid.at("n_lateral").integer()),
                            static_cast<std::size_t>(grid.at("n_depth").integer()),
                            grid.at("spacing_lateral_mm").number() * 1e-3,
                            grid.at("spacing_depth_mm").number() * 1e-3);

  config.seed.value = static_cast<std::uint64_t>(c.at("seed").integer());

  if (c.has("simulate")) {
    const Cursor sim = c.at("simulate");
    SimulateSection section;
    section.n_samples = static_cast<std::size_t>(sim.integer_or("n_samples", 2048));
    const Cursor phantoms = sim.at("phantoms");
    if (phantoms.array_size() == 0) {
      throw ConfigError("config error at simulate.phantoms: must not be empty");
    }
    for (std::size_t k = 0; k < phantoms.array_size(); ++k) {
      section.phantoms.push_back(parse_phantom(phantoms.item(k), config.grid));
    }
    config.simulate = std::move(section);
  }

  if (c.has("estimate")) {
    const Cursor est = c.at("estimate");
    EstimateSection section;
    if (est.has("mode")) {
      const std::string mode = est.at("mode").text();
      if (mode == "inr") {
        section.cfg.mode = EstimationMode::inr;
      } else if (mode == "grid_baseline") {
        section.cfg.mode = EstimationMode::grid_baseline;
      } else {
        throw ConfigError("config error at estimate.mode: expected 'inr' or 'grid_baseline'");
      }
    }
    section.cfg.epochs = static_cast<int>(est.integer_or("epochs", 1000));
    section.cfg.alpha = est.number_or("alpha", 0.01);
    section.cfg.learning_rate = est.number_or("learning_rate", 0.001);
    section.c0 = est.number_or("c0_mps", 1540.0);
    if (est.has("clamp_mps")) {
      const Cursor clamp = est.at("clamp_mps");
      if (clamp.array_size() != 2) {
        throw ConfigError("config error at estimate.clamp_mps: expected [min, max]");
      }
      section.cfg.clamp_min = clamp.item(0).number();
      section.cfg.clamp_max = clamp.item(1).number();
    }
    section.cfg.f_number = est.number_or("f_number", 1.0);
    section.cfg.param_scale = est.number_or("param_scale", 100.0);
    if (est.has("siren")) {
      const Cursor siren = est.at("siren");
      section.cfg.siren.hidden_layers =
          static_cast<std::size_t>(siren.integer_or("hidden_layers", 3));
      section.cfg.siren.hidden_units =
          static_cast<std::size_t>(siren.integer_or("hidden_units", 128));
      section.cfg.siren.omega = siren.number_or("omega", 30.0);
      section.cfg.siren.output_scale = siren.number_or("output_scale", 100.0);
    }
    section.cfg.checkpoint_every = static_cast<int>(est.integer_or("checkpoint_every", 0));
    section.cfg.bmode_upsample = static_cast<int>(est.integer_or("bmode_upsample", 4));
    section.cfg.bmode_dynamic_range = est.number_or("bmode_dynamic_range_db", 50.0);
    section.cfg.seed = config.seed;
    try {
      section.cfg.validate();
    } catch (const ConfigError& e) {
      throw ConfigError("config error at estimate: " + std::string(e.what()));
    }
    config.estimate = std::move(section);
  }

  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path + ": cannot open config file");
  std::stringstream buffer;
  buffer << is.rdbuf();
  return parse_config(buffer.str(), path);
}

std::string config_echo_json(const RunConfig& config) {
  json root;
  root["geometry"] = {{"element_count", config.geometry.element_count()},
                      {"pitch_mm", config.geometry.pitch() * 1e3}};
  root["pulse"] = {{"center_frequency_mhz", config.pulse.center_frequency * 1e-6},
                   {"sampling_frequency_mhz", config.pulse.sampling_frequency * 1e-6},
                   {"fractional_bandwidth", config.pulse.fractional_bandwidth},
                   {"pulse_cycles", config.pulse.pulse_cycles}};
  root["grid"] = {{"origin_mm", {config.grid.origin().x * 1e3, config.grid.origin().z * 1e3}},
                  {"n_lateral", config.grid.n_lateral()},
                  {"n_depth", config.grid.n_depth()},
                  {"spacing_lateral_mm", config.grid.spacing_lateral() * 1e3},
                  {"spacing_depth_mm", config.grid.spacing_depth() * 1e3}};
  root["seed"] = config.seed.value;
  if (config.simulate.has_value()) {
    json sim;
    sim["n_samples"] = config.simulate->n_samples;
    sim["phantoms"] = json::array();
    for (const PhantomSpec& spec : config.simulate->phantoms) {
      json p;
      p["name"] = spec.name;
      p["background_sos_mps"] = spec.background_sos;
      p["scatterer_density_per_mm2"] = spec.scatterer_density;
      p["inclusions"] = json::array();
      for (const Inclusion& inc : spec.inclusions) {
        p["inclusions"].push_back({{"center_mm", {inc.center.x * 1e3, inc.center.z * 1e3}},
                                   {"radius_mm", inc.radius * 1e3},
                                   {"sos_mps", inc.sos}});
      }
      sim["phantoms"].push_back(std::move(p));
    }
    root["simulate"] = std::move(sim);
  }
  if (config.estimate.has_value()) {
    const EstimationConfig& cfg = config.estimate->cfg;
    root["estimate"] = {
        {"mode", cfg.mode == EstimationMode::inr ? "inr" : "grid_baseline"},
        {"epochs", cfg.epochs},
        {"alpha", cfg.alpha},
        {"learning_rate", cfg.learning_rate},
        {"c0_mps", config.estimate->c0},
        {"clamp_mps", {cfg.clamp_min, cfg.clamp_max}},
        {"f_number", cfg.f_number},
        {"param_scale", cfg.param_scale},
        {"siren",
         {{"hidden_layers", cfg.siren.hidden_layers},
          {"hidden_units", cfg.siren.hidden_units},
          {"omega", cfg.siren.omega},
          {"output_scale", cfg.siren.output_scale}}},
        {"checkpoint_every", cfg.checkpoint_every},
        {"bmode_upsample", cfg.bmode_upsample},
        {"bmode_dynamic_range_db", cfg.bmode_dynamic_range}};
  }
  return root.dump(2);
}

}  // namespace sosmap
