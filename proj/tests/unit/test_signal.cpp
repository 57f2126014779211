#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "helpers.hpp"
#include "sosmap/errors.hpp"
#include "sosmap/random.hpp"
#include "sosmap/signal.hpp"

using namespace sosmap;
using cplx = std::complex<double>;

namespace {

// O(n^2) DFT-based oracle applying the same analytic filter.
std::vector<cplx> analytic_oracle(const std::vector<double>& x) {
  std::size_t n = 1;
  while (n < x.size()) n <<= 1;
  std::vector<cplx> spectrum(n, {0.0, 0.0});
  for (std::size_t k = 0; k < n; ++k) {
    cplx acc{0.0, 0.0};
    for (std::size_t t = 0; t < x.size(); ++t) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * t) / static_cast<double>(n);
      acc += x[t] * cplx{std::cos(ang), std::sin(ang)};
    }
    spectrum[k] = acc;
  }
  for (std::size_t k = 1; k < n / 2; ++k) spectrum[k] *= 2.0;
  for (std::size_t k = n / 2 + 1; k < n; ++k) spectrum[k] = {0.0, 0.0};
  std::vector<cplx> out(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    cplx acc{0.0, 0.0};
    for (std::size_t k = 0; k < n; ++k) {
      const double ang = 2.0 * std::numbers::pi * static_cast<double>(k * t) / static_cast<double>(n);
      acc += spectrum[k] * cplx{std::cos(ang), std::sin(ang)};
    }
    out[t] = acc / static_cast<double>(n);
  }
  return out;
}

}  // namespace

TEST_CASE("fft_inplace matches a direct DFT and round-trips") {
  Rng rng(5);
  std::vector<cplx> data(64);
  for (auto& v : data) v = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  const std::vector<cplx> orig = data;

  std::vector<cplx> direct(64);
  for (std::size_t k = 0; k < 64; ++k) {
    cplx acc{0.0, 0.0};
    for (std::size_t t = 0; t < 64; ++t) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * t) / 64.0;
      acc += orig[t] * cplx{std::cos(ang), std::sin(ang)};
    }
    direct[k] = acc;
  }

  fft_inplace(data, false);
  for (std::size_t k = 0; k < 64; ++k) CHECK(std::abs(data[k] - direct[k]) < 1e-11);
  fft_inplace(data, true);
  for (std::size_t k = 0; k < 64; ++k) CHECK(std::abs(data[k] - orig[k]) < 1e-12);

  std::vector<cplx> bad(3);
  CHECK_THROWS_AS(fft_inplace(bad, false), ConfigError);
}

TEST_CASE("hilbert_analytic: cosine becomes a unit-magnitude phasor") {
  const double fs = 25e6;
  const double f = 5e6;
  const std::size_t n = 512;
  std::vector<double> trace(n);
  for (std::size_t t = 0; t < n; ++t) {
    trace[t] = std::cos(2.0 * std::numbers::pi * f * static_cast<double>(t) / fs);
  }
  const auto iq = hilbert_analytic(trace);
  for (std::size_t t = n / 4; t < 3 * n / 4; ++t) {
    CHECK(std::abs(std::abs(iq[t]) - 1.0) < 1e-2);
    const double expected_phase = 2.0 * std::numbers::pi * f * static_cast<double>(t) / fs;
    const cplx expected = std::polar(1.0, expected_phase);
    CHECK(std::abs(iq[t] - expected) < 2e-2);
  }
}

TEST_CASE("hilbert_analytic: zero trace stays zero, real part is preserved") {
  std::vector<double> zeros(100, 0.0);
  for (const cplx& v : hilbert_analytic(zeros)) CHECK(std::abs(v) == 0.0);

  Rng rng(11);
  std::vector<double> trace(100);
  double peak = 0.0;
  for (double& v : trace) {
    v = rng.uniform(-1.0, 1.0);
    peak = std::max(peak, std::abs(v));
  }
  const auto iq = hilbert_analytic(trace);
  const auto oracle = analytic_oracle(trace);
  for (std::size_t t = 0; t < trace.size(); ++t) {
    CHECK(std::abs(iq[t].real() - trace[t]) < 1e-9 * peak);
    CHECK(std::abs(iq[t] - oracle[t]) < 1e-9 * peak);
  }
}

TEST_CASE("analytic magnitude is invariant to sign flips") {
  Rng rng(13);
  std::vector<double> trace(96), flipped(96);
  for (std::size_t t = 0; t < 96; ++t) {
    trace[t] = rng.uniform(-1.0, 1.0);
    flipped[t] = -trace[t];
  }
  const auto a = hilbert_analytic(trace);
  const auto b = hilbert_analytic(flipped);
  for (std::size_t t = 0; t < 96; ++t) {
    CHECK(std::abs(std::abs(a[t]) - std::abs(b[t])) < 1e-12);
  }
}

TEST_CASE("analytic_signal: input validation") {
  ChannelData rf;
  rf.n_tx = 1;
  rf.n_rx = 1;
  rf.n_samples = 4;
  rf.sampling_frequency = 25e6;
  rf.rf.assign(4, 0.0);
  CHECK_THROWS_AS(analytic_signal(rf), ConfigError);

  rf.n_samples = 16;
  rf.n_rx = 2;
  rf.rf.assign(32, 0.0);
  rf.rf[16 + 3] = std::nan("");
  CHECK_THROWS_WITH_AS(analytic_signal(rf), doctest::Contains("rx=1"), NumericError);
}

TEST_CASE("interp_complex: nodes, midpoints, and the zero-padding ramp") {
  const std::vector<cplx> trace{{1.0, -2.0}, {3.0, 4.0}, {-5.0, 6.0}};
  // fs and t0 chosen so every sample time is exactly representable
  const double fs = 8.0;
  const double t0 = 0.25;
  const double dt = 0.125;

  auto at = [&](double t) { return interp_complex(trace, fs, t0, t); };

  CHECK(at(t0).value == trace[0]);
  CHECK(at(t0 + dt).value == trace[1]);
  CHECK(at(t0 + 2 * dt).value == trace[2]);
  const cplx mid = at(t0 + 0.5 * dt).value;
  CHECK(std::abs(mid - (trace[0] + trace[1]) / 2.0) < 1e-15);

  // linear ramp to zero over one sample period beyond either end
  CHECK(std::abs(at(t0 + 2.5 * dt).value - trace[2] * 0.5) < 1e-15);
  CHECK(std::abs(at(t0 - 0.5 * dt).value - trace[0] * 0.5) < 1e-15);
  CHECK(at(t0 + 3 * dt).value == cplx{0.0, 0.0});
  CHECK(at(t0 - dt).value == cplx{0.0, 0.0});
  CHECK(at(t0 + 100.0).value == cplx{0.0, 0.0});
  CHECK(at(t0 + 100.0).dvalue_dt == cplx{0.0, 0.0});

  // continuity across the padded boundary
  const double eps = 1e-9;
  CHECK(std::abs(at(t0 + 3 * dt - eps).value) < 1e-7);
  CHECK(std::abs(at(t0 - dt + eps).value) < 1e-7);
}

TEST_CASE("interp_complex: derivative matches central finite differences") {
  Rng rng(17);
  std::vector<cplx> trace(32);
  for (auto& v : trace) v = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  const double fs = 25e6;
  const double t0 = 0.0;
  const double h = 1e-12;
  for (int k = 0; k < 30; ++k) {
    // midpoints away from interpolation kinks
    const double t = (std::floor(rng.uniform(0.0, 30.0)) + rng.uniform(0.3, 0.7)) / fs;
    const auto sample = interp_complex(trace, fs, t0, t);
    const cplx fd = (interp_complex(trace, fs, t0, t + h).value -
                     interp_complex(trace, fs, t0, t - h).value) /
                    (2.0 * h);
    CHECK(std::abs(sample.dvalue_dt - fd) < 1e-6 * std::max(1.0, std::abs(fd)));
  }
}
