#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sosmap/estimator.hpp"
#include "sosmap/geometry.hpp"

namespace sosmap {

// Root mean squared error over all grid cells [m/s]. Grids must match.
double rmse(const SoSGrid& estimate, const SoSGrid& reference);

// RMSE restricted to reference cells that differ from the reference's most
// frequent value (the inclusion region of a piecewise-constant truth map).
// Returns NaN when the reference is uniform.
double rmse_roi(const SoSGrid& estimate, const SoSGrid& reference);

struct CrossSection {
  std::string axis;  // "lateral" or "longitudinal"
  std::vector<double> position_mm;
  std::vector<double> estimated;  // [m/s]
  std::vector<double> reference;  // [m/s]
};

// Profiles along the grid row and column nearest to `center` (lateral and
// longitudinal cross sections). Throws std::domain_error when center is
// outside the grid hull.
std::pair<CrossSection, CrossSection> cross_sections(const SoSGrid& estimate,
                                                     const SoSGrid& reference, Vec2 center);

// Centroid of the reference cells that differ from the most frequent value
// (the inclusion of a piecewise-constant truth); grid center when uniform.
Vec2 reference_center(const SoSGrid& reference);

// SoS map CSV: "# sosmap-map v1" header with grid metadata, then n_depth
// rows of n_lateral values at 6 significant digits. Re-reading a written
// file and writing it again is byte-identical.
void write_map_csv(const std::string& path, const SoSGrid& map);
SoSGrid read_map_csv(const std::string& path);

// Binary 8-bit PGM of a log-compressed image ([-dynamic_range, 0] dB -> 0..255).
void write_pgm(const std::string& path, const BModeImage& image);

// Plain CSV matrix of magnitudes (for B-mode or aperture-stack exports).
void write_image_csv(const std::string& path, const std::vector<double>& values,
                     std::size_t rows, std::size_t cols);

// Per-epoch training log: header "epoch,pe,tv,total".
void write_loss_csv(const std::string& path, const std::vector<LossBreakdown>& trace);
std::vector<LossBreakdown> read_loss_csv(const std::string& path);

void write_cross_sections_csv(const std::string& path, const CrossSection& lateral,
                              const CrossSection& longitudinal);

// Writes the full report into out_dir: sos_map.csv, bmode.pgm,
// loss_trace.csv, cross_sections.csv, metrics.json. Cross sections run
// through the reference inclusion centroid (grid center when uniform).
// config_echo_json, when non-empty, is embedded verbatim under "config".
void emit_report(const EstimationResult& result, const SoSGrid& reference,
                 const std::string& out_dir, const std::string& config_echo_json = "");

}  // namespace sosmap
