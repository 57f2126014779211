#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "sosmap/geometry.hpp"
#include "sosmap/phantom.hpp"

namespace sosmap {

// Raw synthetic-aperture RF data: every element transmits alone, all
// elements receive. rf is laid out [tx][rx][sample].
struct ChannelData {
  std::size_t n_tx = 0;
  std::size_t n_rx = 0;
  std::size_t n_samples = 0;
  double sampling_frequency = 0.0;  // [Hz]
  double t0 = 0.0;                  // [s], time of first sample
  std::vector<double> rf;

  std::span<const double> trace(std::size_t tx, std::size_t rx) const {
    return {rf.data() + (tx * n_rx + rx) * n_samples, n_samples};
  }
  std::span<double> trace(std::size_t tx, std::size_t rx) {
    return {rf.data() + (tx * n_rx + rx) * n_samples, n_samples};
  }
};

// Gaussian envelope sigma [s] such that the -6 dB width of the pulse-echo
// power spectrum |G(f)|^2 equals fractional_bandwidth * f0:
//   sigma_t = sqrt(0.6 ln 10) / (pi * fb * f0)
double pulse_sigma(const PulseModel& pulse);

// Half-width [s] of the evaluated pulse support:
// max(pulse_cycles / (2 f0), 4 sigma_t).
double pulse_half_support(const PulseModel& pulse);

// Smallest n_samples covering the deepest scatterer round trip at the
// slowest map speed plus the pulse support.
std::size_t min_required_samples(const ArrayGeometry& geom, const PulseModel& pulse,
                                 const SoSGrid& sos, const ScattererField& scatterers);

// Single-scattering straight-ray forward model. Each echo is a
// Gaussian-enveloped cosine delayed by the two-way travel time through the
// true SoS map (same ray integration as the beamformer) with 1/sqrt(path)
// amplitude decay per leg. Throws ConfigError naming the minimum when
// n_samples is too small.
ChannelData simulate_rf(const ArrayGeometry& geom, const PulseModel& pulse,
                        const SoSGrid& true_sos, const ScattererField& scatterers,
                        std::size_t n_samples);

// Channel-data container: little-endian binary file
//   magic "USRFCHAN" | u32 version=1 | u32 n_tx | u32 n_rx | u32 n_samples |
//   f64 sampling_frequency | f64 t0 | f32 samples [tx][rx][sample]
// plus a JSON sidecar at path + ".meta.json" (dims, fs, t0, and the caller's
// extra object under "extra"). Samples are stored at 32-bit precision.
void write_channel_data(const std::string& path, const ChannelData& data,
                        const std::string& extra_meta_json = "");
ChannelData read_channel_data(const std::string& path);

}  // namespace sosmap
