#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sosmap/geometry.hpp"
#include "sosmap/signal.hpp"

namespace sosmap {

// Pre-sum complex aperture data: one row of receive-channel values per
// pixel (transmits already summed). Masked entries are exactly zero.
struct ApertureStack {
  std::size_t n_pixels = 0;
  std::size_t n_rx = 0;
  double f_number = 1.0;
  std::vector<std::complex<double>> values;  // [pixel][rx]
  std::vector<std::uint8_t> valid;           // [pixel][rx]

  std::complex<double> at(std::size_t p, std::size_t r) const { return values[p * n_rx + r]; }
  bool is_valid(std::size_t p, std::size_t r) const { return valid[p * n_rx + r] != 0; }
};

// Log-compressed envelope image; max value 0 dB, floor -dynamic_range.
struct BModeImage {
  std::size_t n_depth = 0;
  std::size_t n_lateral = 0;
  double dynamic_range = 50.0;      // [dB]
  std::vector<double> envelope_db;  // row-major [depth][lateral]
};

// Travel time [s] along the straight segment src->dst: composite midpoint
// rule with step <= 0.1 mm over the slowness 1/c, c bilinearly interpolated
// from the map (nearest-edge extension outside the hull). src == dst gives 0.
double travel_time(Vec2 src, Vec2 dst, const SoSGrid& sos);

// Accumulates upstream * d(travel_time)/d(sos value) into grad
// (size = sos.values().size()). Only cells touched by the ray receive
// contributions.
void travel_time_adjoint(Vec2 src, Vec2 dst, const SoSGrid& sos, double upstream,
                         std::span<double> grad);

// Differentiable synthetic-aperture delay-and-sum. Binds the analytic data,
// array, and pixel grid once; forward() beamforms through a given SoS map
// and caches the per-(element, pixel) travel times that adjoint() reuses.
//
// stack[p][r] = sum_tx interp(iq[tx][r], tau[tx][p] + tau[r][p])
// with receive element r masked unless |x_r - x_p| <= z_p / (2 f#).
class DasOperator {
 public:
  DasOperator(const AnalyticChannelData& iq, const ArrayGeometry& geom,
              const ImagingGrid& pixels, double f_number);

  ApertureStack forward(const SoSGrid& sos);

  // Given dL/dstack (packed dL/dRe + i dL/dIm per entry), returns dL/d(sos
  // values) through the delays of the latest forward() call. The reduction
  // into the grid is block-deterministic (bit-identical at any thread count).
  std::vector<double> adjoint(std::span<const std::complex<double>> dl_dstack) const;

  const std::vector<Vec2>& pixels() const { return pixel_pos_; }

 private:
  const AnalyticChannelData* iq_;
  const ArrayGeometry* geom_;
  ImagingGrid grid_;
  double f_number_;
  std::vector<Vec2> pixel_pos_;
  std::vector<double> tau_;  // [element][pixel], filled by forward()
  std::vector<double> last_sos_;
  std::optional<ImagingGrid> last_sos_grid_;
  bool has_forward_ = false;
};

// One-shot convenience wrapper around DasOperator::forward.
ApertureStack das_beamform(const AnalyticChannelData& iq, const ArrayGeometry& geom,
                           const ImagingGrid& pixels, const SoSGrid& sos, double f_number);

// Envelope |sum_r stack[p][r]| log-compressed to [-dynamic_range, 0] dB.
// Throws NumericError("no signal to display") on an all-zero stack.
BModeImage bmode(const ApertureStack& stack, const ImagingGrid& pixels,
                 double dynamic_range_db);

// Aperture coherence sum_p |sum_r s|^2 / sum_p (n_valid_p * sum_r |s|^2),
// in [0, 1]; higher when delays (hence the SoS map) focus correctly.
double coherence(const ApertureStack& stack);

}  // namespace sosmap
