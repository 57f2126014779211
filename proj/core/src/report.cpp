#include "sosmap/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "sosmap/errors.hpp"

namespace sosmap {

namespace {

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string fmt_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void require_same_grid(const SoSGrid& a, const SoSGrid& b, const char* what) {
  if (!(a.grid() == b.grid())) {
    throw ConfigError(std::string(what) + ": grids do not match");
  }
}

// Most frequent reference value = background of a piecewise-constant truth.
double background_value(const SoSGrid& reference) {
  std::map<double, std::size_t> counts;
  for (double v : reference.values()) counts[v]++;
  double best = reference.values().front();
  std::size_t best_count = 0;
  for (const auto& [value, count] : counts) {
    if (count > best_count) {
      best = value;
      best_count = count;
    }
  }
  return best;
}

}  // namespace

double rmse(const SoSGrid& estimate, const SoSGrid& reference) {
  require_same_grid(estimate, reference, "rmse");
  double acc = 0.0;
  for (std::size_t i = 0; i < estimate.values().size(); ++i) {
    const double d = estimate.values()[i] - reference.values()[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(estimate.values().size()));
}

double rmse_roi(const SoSGrid& estimate, const SoSGrid& reference) {
  require_same_grid(estimate, reference, "rmse_roi");
  const double bg = background_value(reference);
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < estimate.values().size(); ++i) {
    if (reference.values()[i] == bg) continue;
    const double d = estimate.values()[i] - reference.values()[i];
    acc += d * d;
    ++count;
  }
  if (count == 0) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(acc / static_cast<double>(count));
}

std::pair<CrossSection, CrossSection> cross_sections(const SoSGrid& estimate,
                                                     const SoSGrid& reference, Vec2 center) {
  require_same_grid(estimate, reference, "cross_sections");
  const ImagingGrid& g = estimate.grid();
  const Vec2 lo = g.hull_min();
  const Vec2 hi = g.hull_max();
  if (center.x < lo.x || center.x > hi.x || center.z < lo.z || center.z > hi.z) {
    std::ostringstream msg;
    msg << "cross_sections: center (" << center.x << ", " << center.z << ") outside the grid";
    throw std::domain_error(msg.str());
  }
  const auto j = static_cast<std::size_t>(std::clamp(
      std::llround((center.z - g.origin().z) / g.spacing_depth()), 0ll,
      static_cast<long long>(g.n_depth() - 1)));
  const auto i = static_cast<std::size_t>(std::clamp(
      std::llround((center.x - g.origin().x) / g.spacing_lateral()), 0ll,
      static_cast<long long>(g.n_lateral() - 1)));

  CrossSection lateral;
  lateral.axis = "lateral";
  for (std::size_t ii = 0; ii < g.n_lateral(); ++ii) {
    lateral.position_mm.push_back(g.pixel(ii, j).x * 1e3);
    lateral.estimated.push_back(estimate.at(j, ii));
    lateral.reference.push_back(reference.at(j, ii));
  }
  CrossSection longitudinal;
  longitudinal.axis = "longitudinal";
  for (std::size_t jj = 0; jj < g.n_depth(); ++jj) {
    longitudinal.position_mm.push_back(g.pixel(i, jj).z * 1e3);
    longitudinal.estimated.push_back(estimate.at(jj, i));
    longitudinal.reference.push_back(reference.at(jj, i));
  }
  return {lateral, longitudinal};
}

Vec2 reference_center(const SoSGrid& reference) {
  const ImagingGrid& g = reference.grid();
  const double bg = background_value(reference);
  double cx = 0.0, cz = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < g.n_depth(); ++j) {
    for (std::size_t i = 0; i < g.n_lateral(); ++i) {
      if (reference.at(j, i) != bg) {
        const Vec2 p = g.pixel(i, j);
        cx += p.x;
        cz += p.z;
        ++count;
      }
    }
  }
  if (count > 0) return {cx / static_cast<double>(count), cz / static_cast<double>(count)};
  const Vec2 lo = g.hull_min();
  const Vec2 hi = g.hull_max();
  return {0.5 * (lo.x + hi.x), 0.5 * (lo.z + hi.z)};
}

void write_map_csv(const std::string& path, const SoSGrid& map) {
  std::ofstream os(path);
  if (!os) throw FormatError(path + ": cannot open for writing");
  const ImagingGrid& g = map.grid();
  os << "# sosmap-map v1\n";
  os << "# n_lateral," << g.n_lateral() << "\n";
  os << "# n_depth," << g.n_depth() << "\n";
  os << "# origin_mm," << fmt6(g.origin().x * 1e3) << "," << fmt6(g.origin().z * 1e3) << "\n";
  os << "# spacing_mm," << fmt6(g.spacing_lateral() * 1e3) << ","
     << fmt6(g.spacing_depth() * 1e3) << "\n";
  for (std::size_t j = 0; j < g.n_depth(); ++j) {
    for (std::size_t i = 0; i < g.n_lateral(); ++i) {
      os << (i == 0 ? "" : ",") << fmt6(map.at(j, i));
    }
    os << "\n";
  }
  if (!os) throw FormatError(path + ": write failed");
}

SoSGrid read_map_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError(path + ": cannot open");
  std::string line;
  if (!std::getline(is, line) || line != "# sosmap-map v1") {
    throw FormatError(path + ": missing 'sosmap-map v1' header");
  }
  auto read_meta = [&](const std::string& key) {
    if (!std::getline(is, line) || line.rfind("# " + key + ",", 0) != 0) {
      throw FormatError(path + ": missing metadata line '" + key + "'");
    }
    return line.substr(key.size() + 3);
  };
  auto split = [&](const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        out.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw FormatError(path + ": bad number '" + tok + "'");
      }
    }
    return out;
  };
  const auto n_lateral = static_cast<std::size_t>(std::stoul(read_meta("n_lateral")));
  const auto n_depth = static_cast<std::size_t>(std::stoul(read_meta("n_depth")));
  const std::vector<double> origin_mm = split(read_meta("origin_mm"));
  const std::vector<double> spacing_mm = split(read_meta("spacing_mm"));
  if (origin_mm.size() != 2 || spacing_mm.size() != 2) {
    throw FormatError(path + ": origin/spacing must have two entries");
  }
  const ImagingGrid grid({origin_mm[0] * 1e-3, origin_mm[1] * 1e-3}, n_lateral, n_depth,
                         spacing_mm[0] * 1e-3, spacing_mm[1] * 1e-3);
  std::vector<double> values;
  values.reserve(grid.n_pixels());
  for (std::size_t j = 0; j < n_depth; ++j) {
    if (!std::getline(is, line)) throw FormatError(path + ": truncated at row " + std::to_string(j));
    const std::vector<double> row = split(line);
    if (row.size() != n_lateral) {
      throw FormatError(path + ": row " + std::to_string(j) + " has " +
                        std::to_string(row.size()) + " values, expected " +
                        std::to_string(n_lateral));
    }
    values.insert(values.end(), row.begin(), row.end());
  }
  return SoSGrid(grid, std::move(values));
}

void write_pgm(const std::string& path, const BModeImage& image) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError(path + ": cannot open for writing");
  os << "P5\n" << image.n_lateral << " " << image.n_depth << "\n255\n";
  for (double db : image.envelope_db) {
    const double unit = (db + image.dynamic_range) / image.dynamic_range;
    const auto px = static_cast<unsigned char>(
        std::clamp(std::lround(unit * 255.0), 0l, 255l));
    os.write(reinterpret_cast<const char*>(&px), 1);
  }
  if (!os) throw FormatError(path + ": write failed");
}

void write_image_csv(const std::string& path, const std::vector<double>& values,
                     std::size_t rows, std::size_t cols) {
  if (values.size() != rows * cols) {
    throw std::invalid_argument("write_image_csv: size mismatch");
  }
  std::ofstream os(path);
  if (!os) throw FormatError(path + ": cannot open for writing");
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      os << (c == 0 ? "" : ",") << fmt6(values[r * cols + c]);
    }
    os << "\n";
  }
}

void write_loss_csv(const std::string& path, const std::vector<LossBreakdown>& trace) {
  std::ofstream os(path);
  if (!os) throw FormatError(path + ": cannot open for writing");
  os << "epoch,pe,tv,total\n";
  for (std::size_t e = 0; e < trace.size(); ++e) {
    os << e << "," << fmt_full(trace[e].pe) << "," << fmt_full(trace[e].tv) << ","
       << fmt_full(trace[e].total) << "\n";
  }
}

std::vector<LossBreakdown> read_loss_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError(path + ": cannot open");
  std::string line;
  if (!std::getline(is, line) || line != "epoch,pe,tv,total") {
    throw FormatError(path + ": missing loss-trace header");
  }
  std::vector<LossBreakdown> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> fields;
    while (std::getline(ss, tok, ',')) fields.push_back(std::stod(tok));
    if (fields.size() != 4) throw FormatError(path + ": bad row '" + line + "'");
    LossBreakdown b;
    b.pe = fields[1];
    b.tv = fields[2];
    b.total = fields[3];
    b.alpha = b.tv != 0.0 ? (b.total - b.pe) / b.tv : 0.0;
    out.push_back(b);
  }
  return out;
}

void write_cross_sections_csv(const std::string& path, const CrossSection& lateral,
                              const CrossSection& longitudinal) {
  std::ofstream os(path);
  if (!os) throw FormatError(path + ": cannot open for writing");
  os << "axis,position_mm,estimated_mps,reference_mps\n";
  auto dump = [&](const CrossSection& cs) {
    for (std::size_t k = 0; k < cs.position_mm.size(); ++k) {
      os << cs.axis << "," << fmt6(cs.position_mm[k]) << "," << fmt6(cs.estimated[k]) << ","
         << fmt6(cs.reference[k]) << "\n";
    }
  };
  dump(lateral);
  dump(longitudinal);
}

void emit_report(const EstimationResult& result, const SoSGrid& reference,
                 const std::string& out_dir, const std::string& config_echo_json) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw FormatError(out_dir + ": cannot create output directory: " + ec.message());

  write_map_csv(out_dir + "/sos_map.csv", result.sos_map);
  write_pgm(out_dir + "/bmode.pgm", result.final_bmode);
  write_loss_csv(out_dir + "/loss_trace.csv", result.loss_trace);

  const auto [lateral, longitudinal] =
      cross_sections(result.sos_map, reference, reference_center(reference));
  write_cross_sections_csv(out_dir + "/cross_sections.csv", lateral, longitudinal);

  nlohmann::json metrics;
  metrics["rmse_mps"] = rmse(result.sos_map, reference);
  const double roi = rmse_roi(result.sos_map, reference);
  if (std::isfinite(roi)) metrics["rmse_roi_mps"] = roi;
  metrics["wall_time_s"] = result.wall_time_s;
  metrics["epochs"] = result.loss_trace.size();
  if (!result.loss_trace.empty()) {
    metrics["final_loss"] = {{"pe", result.loss_trace.back().pe},
                             {"tv", result.loss_trace.back().tv},
                             {"total", result.loss_trace.back().total}};
  }
  if (!config_echo_json.empty()) {
    nlohmann::json echo = nlohmann::json::parse(config_echo_json, nullptr, false);
    metrics["config"] = echo.is_discarded() ? nlohmann::json(config_echo_json) : echo;
  }
  const std::string metrics_path = out_dir + "/metrics.json";
  std::ofstream ms(metrics_path);
  if (!ms) throw FormatError(metrics_path + ": cannot open for writing");
  ms << metrics.dump(2) << "\n";
}

}  // namespace sosmap
