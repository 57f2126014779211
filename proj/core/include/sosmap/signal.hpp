#pragma once

#include <complex>
#include <span>
#include <vector>

#include "sosmap/simulate.hpp"

namespace sosmap {

// Analytic (complex) form of the RF data; real part equals the source RF.
struct AnalyticChannelData {
  std::size_t n_tx = 0;
  std::size_t n_rx = 0;
  std::size_t n_samples = 0;
  double sampling_frequency = 0.0;  // [Hz]
  double t0 = 0.0;                  // [s]
  std::vector<std::complex<double>> iq;

  std::span<const std::complex<double>> trace(std::size_t tx, std::size_t rx) const {
    return {iq.data() + (tx * n_rx + rx) * n_samples, n_samples};
  }
};

// In-place radix-2 FFT; data.size() must be a power of two.
// inverse=true applies the 1/N scaling.
void fft_inplace(std::span<std::complex<double>> data, bool inverse);

// Discrete Hilbert transform of one trace: zero-pad to the next power of
// two, double positive frequencies, zero negative ones (DC and Nyquist
// kept), inverse FFT, truncate. The real part of the result equals the
// input.
std::vector<std::complex<double>> hilbert_analytic(std::span<const double> trace);

// Per-trace analytic conversion of the full data set. Throws ConfigError
// when n_samples < 8 and NumericError (with the trace index) on non-finite
// input.
AnalyticChannelData analytic_signal(const ChannelData& rf);

// Linear interpolation of a complex trace at time t, with the derivative
// w.r.t. t for adjoint propagation. The trace is treated as zero-padded by
// one sample on each side, so the value ramps linearly to zero over one
// sample period past either end and is exactly zero (with zero derivative)
// beyond that; the function is continuous everywhere.
struct InterpSample {
  std::complex<double> value;
  std::complex<double> dvalue_dt;  // [1/s]
};
InterpSample interp_complex(std::span<const std::complex<double>> trace, double fs,
                            double t0, double t);

}  // namespace sosmap
