#include "sosmap/signal.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "sosmap/errors.hpp"
#include "sosmap/parallel.hpp"

namespace sosmap {

void fft_inplace(std::span<std::complex<double>> data, bool inverse) {
  const std::size_t n = data.size();
  if (n == 0 || (n & (n - 1)) != 0) {
    throw ConfigError("fft_inplace: size must be a power of two");
  }
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen = std::polar(1.0, ang);
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w{1.0, 0.0};
      for (std::size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u = data[i + j];
        const std::complex<double> v = data[i + j + len / 2] * w;
        data[i + j] = u + v;
        data[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    const double inv_n = 1.0 / static_cast<double>(n);
    for (auto& x : data) x *= inv_n;
  }
}

std::vector<std::complex<double>> hilbert_analytic(std::span<const double> trace) {
  const std::size_t n = trace.size();
  std::size_t padded = 1;
  while (padded < n) padded <<= 1;
  std::vector<std::complex<double>> buf(padded, {0.0, 0.0});
  for (std::size_t i = 0; i < n; ++i) buf[i] = {trace[i], 0.0};
  fft_inplace(buf, false);
  // Analytic filter: keep DC and Nyquist, double positive, zero negative.
  for (std::size_t k = 1; k < padded / 2; ++k) buf[k] *= 2.0;
  for (std::size_t k = padded / 2 + 1; k < padded; ++k) buf[k] = {0.0, 0.0};
  fft_inplace(buf, true);
  buf.resize(n);
  return buf;
}

AnalyticChannelData analytic_signal(const ChannelData& rf) {
  if (rf.n_samples < 8) throw ConfigError("analytic_signal: n_samples must be >= 8");
  AnalyticChannelData out;
  out.n_tx = rf.n_tx;
  out.n_rx = rf.n_rx;
  out.n_samples = rf.n_samples;
  out.sampling_frequency = rf.sampling_frequency;
  out.t0 = rf.t0;
  out.iq.resize(rf.rf.size());

  const std::size_t n_traces = rf.n_tx * rf.n_rx;
  // Validate before transforming so the error names the trace.
  for (std::size_t t = 0; t < n_traces; ++t) {
    const auto tr = rf.trace(t / rf.n_rx, t % rf.n_rx);
    for (double v : tr) {
      if (!std::isfinite(v)) {
        std::ostringstream msg;
        msg << "analytic_signal: non-finite sample in trace (tx=" << t / rf.n_rx
            << ", rx=" << t % rf.n_rx << ")";
        throw NumericError(msg.str());
      }
    }
  }
  parallel_for(n_traces, 4, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const auto analytic = hilbert_analytic(rf.trace(t / rf.n_rx, t % rf.n_rx));
      std::copy(analytic.begin(), analytic.end(), out.iq.begin() + t * rf.n_samples);
    }
  });
  return out;
}

InterpSample interp_complex(std::span<const std::complex<double>> trace, double fs,
                            double t0, double t) {
  const auto n = static_cast<std::ptrdiff_t>(trace.size());
  const double s = (t - t0) * fs;  // position in sample units
  // One zero sample is padded on each side so the value ramps continuously
  // to zero; beyond the padded support value and derivative are exactly 0.
  if (!(s > -1.0) || !(s < static_cast<double>(n))) return {{0.0, 0.0}, {0.0, 0.0}};
  const auto k = static_cast<std::ptrdiff_t>(std::floor(s));
  const double frac = s - static_cast<double>(k);
  const std::complex<double> left = (k >= 0 && k < n) ? trace[static_cast<std::size_t>(k)]
                                                      : std::complex<double>{0.0, 0.0};
  const std::complex<double> right = (k + 1 >= 0 && k + 1 < n)
                                         ? trace[static_cast<std::size_t>(k + 1)]
                                         : std::complex<double>{0.0, 0.0};
  const std::complex<double> slope = right - left;
  return {left + frac * slope, slope * fs};
}

}  // namespace sosmap
