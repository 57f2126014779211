#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "helpers.hpp"
#include "sosmap/errors.hpp"
#include "sosmap/parallel.hpp"
#include "sosmap/signal.hpp"
#include "sosmap/simulate.hpp"

using namespace sosmap;

namespace {

// Envelope peak time of one trace via the analytic magnitude.
double envelope_peak_time(std::span<const double> trace, double fs) {
  const auto iq = hilbert_analytic(trace);
  std::size_t best = 0;
  for (std::size_t t = 1; t < iq.size(); ++t) {
    if (std::abs(iq[t]) > std::abs(iq[best])) best = t;
  }
  return static_cast<double>(best) / fs;
}

const ImagingGrid kGrid({-3.5e-3, 4e-3}, 8, 20, 1e-3, 1e-3);

ScattererField single_scatterer(Vec2 pos) {
  ScattererField field;
  field.positions = {pos};
  field.amplitudes = {1.0};
  field.seed = Seed{0};
  return field;
}

}  // namespace

TEST_CASE("pulse_sigma satisfies the -6 dB two-way bandwidth definition") {
  const PulseModel pulse{5e6, 25e6, 0.6, 2.0};
  const double sigma = pulse_sigma(pulse);
  // envelope exp(-t^2 / 2 sigma^2) has |E(df)| = exp(-2 pi^2 sigma^2 df^2);
  // at df = fb*f0/2 the two-way (power) response must be at -6 dB
  const double df = pulse.fractional_bandwidth * pulse.center_frequency / 2.0;
  const double power_ratio = std::exp(-4.0 * std::numbers::pi * std::numbers::pi * sigma *
                                      sigma * df * df);
  CHECK(power_ratio == doctest::Approx(std::pow(10.0, -0.6)).epsilon(1e-12));
  CHECK(pulse_half_support(pulse) >= pulse.pulse_cycles / (2.0 * pulse.center_frequency));
  CHECK(pulse_half_support(pulse) >= 4.0 * sigma);
}

TEST_CASE("simulate_rf: zero-amplitude scatterers give zero RF") {
  const ArrayGeometry geom(3, 0.3e-3);
  const PulseModel pulse{5e6, 25e6, 0.6, 2.0};
  const SoSGrid sos(kGrid, 1540.0);
  ScattererField field = single_scatterer({0.0, 15e-3});
  field.amplitudes = {0.0};
  const ChannelData rf = simulate_rf(geom, pulse, sos, field, 1024);
  for (double v : rf.rf) CHECK(v == 0.0);
}

TEST_CASE("simulate_rf: monostatic echo arrives at the two-way travel time") {
  const ArrayGeometry geom(3, 0.3e-3);  // center element exactly at x = 0
  const PulseModel pulse{5e6, 25e6, 0.6, 2.0};
  const SoSGrid sos(kGrid, 1540.0);
  const ChannelData rf = simulate_rf(geom, pulse, sos, single_scatterer({0.0, 15e-3}), 1024);
  const double t_peak = envelope_peak_time(rf.trace(1, 1), rf.sampling_frequency);
  const double expected = 2.0 * 15e-3 / 1540.0;  // 19.48 us
  CHECK(std::abs(t_peak - expected) <= 1.5 / rf.sampling_frequency);
}

TEST_CASE("simulate_rf: superposition over scatterers") {
  const ArrayGeometry geom(4, 0.4e-3);
  const PulseModel pulse{5e6, 25e6, 0.6, 2.0};
  const SoSGrid sos(kGrid, 1540.0);
  ScattererField both;
  both.positions = {{-1e-3, 12e-3}, {2e-3, 18e-3}};
  both.amplitudes = {0.8, -1.3};
  const ChannelData rf_both = simulate_rf(geom, pulse, sos, both, 1024);

  ScattererField first = single_scatterer(both.positions[0]);
  first.amplitudes = {both.amplitudes[0]};
  ScattererField second = single_scatterer(both.positions[1]);
  second.amplitudes = {both.amplitudes[1]};
  const ChannelData rf_a = simulate_rf(geom, pulse, sos, first, 1024);
  const ChannelData rf_b = simulate_rf(geom, pulse, sos, second, 1024);

  double peak = 0.0;
  for (double v : rf_both.rf) peak = std::max(peak, std::abs(v));
  REQUIRE(peak > 0.0);
  for (std::size_t i = 0; i < rf_both.rf.size(); ++i) {
    CHECK(std::abs(rf_both.rf[i] - (rf_a.rf[i] + rf_b.rf[i])) < 1e-10 * peak);
  }
}

TEST_CASE("simulate_rf: 1 mm depth shift moves the echo by the two-way time") {
  const ArrayGeometry geom(3, 0.3e-3);
  const PulseModel pulse{5e6, 25e6, 0.6, 2.0};
  const SoSGrid sos(kGrid, 1540.0);
  const ChannelData near = simulate_rf(geom, pulse, sos, single_scatterer({0.0, 15e-3}), 1024);
  const ChannelData far = simulate_rf(geom, pulse, sos, single_scatterer({0.0, 16e-3}), 1024);
  const double shift = envelope_peak_time(far.trace(1, 1), far.sampling_frequency) -
                       envelope_peak_time(near.trace(1, 1), near.sampling_frequency);
  CHECK(std::abs(shift - 2.0 * 1e-3 / 1540.0) <= 1.0 / near.sampling_frequency);
}

TEST_CASE("simulate_rf: deterministic across runs and thread counts") {
  const testutil::MiniScene scene;
  const PhantomSpec spec = testutil::mini_phantom(1510.0);
  const SoSGrid truth = phantom_to_sos_grid(spec, scene.grid);
  const ScattererField field = sample_scatterers(spec, scene.grid, Seed{5});
  sosmap::set_max_threads(1);
  const ChannelData a = simulate_rf(scene.geom, scene.pulse, truth, field, scene.n_samples);
  sosmap::set_max_threads(3);
  const ChannelData b = simulate_rf(scene.geom, scene.pulse, truth, field, scene.n_samples);
  sosmap::set_max_threads(0);
  REQUIRE(a.rf.size() == b.rf.size());
  for (std::size_t i = 0; i < a.rf.size(); ++i) CHECK(a.rf[i] == b.rf[i]);
}

TEST_CASE("simulate_rf: short traces are rejected naming the minimum") {
  const ArrayGeometry geom(3, 0.3e-3);
  const PulseModel pulse{5e6, 25e6, 0.6, 2.0};
  const SoSGrid sos(kGrid, 1540.0);
  const ScattererField field = single_scatterer({0.0, 15e-3});
  const std::size_t required = min_required_samples(geom, pulse, sos, field);
  const std::string required_text = std::to_string(required);
  CHECK_THROWS_WITH_AS(simulate_rf(geom, pulse, sos, field, required - 10),
                       doctest::Contains(required_text.c_str()), ConfigError);
  CHECK_NOTHROW(simulate_rf(geom, pulse, sos, field, required));
}

TEST_CASE("channel-data container round-trips at 32-bit sample precision") {
  const testutil::MiniScene scene;
  const PhantomSpec spec = testutil::mini_phantom(1540.0);
  const SoSGrid truth = phantom_to_sos_grid(spec, scene.grid);
  const ScattererField field = sample_scatterers(spec, scene.grid, Seed{3});
  const ChannelData rf = simulate_rf(scene.geom, scene.pulse, truth, field, scene.n_samples);

  const std::string dir = std::filesystem::temp_directory_path() / "sosmap_test_container";
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/channel_data.bin";
  write_channel_data(path, rf, R"({"note":"test"})");

  const ChannelData back = read_channel_data(path);
  CHECK(back.n_tx == rf.n_tx);
  CHECK(back.n_rx == rf.n_rx);
  CHECK(back.n_samples == rf.n_samples);
  CHECK(back.sampling_frequency == rf.sampling_frequency);
  CHECK(back.t0 == rf.t0);
  for (std::size_t i = 0; i < rf.rf.size(); ++i) {
    CHECK(back.rf[i] == static_cast<double>(static_cast<float>(rf.rf[i])));
  }
  CHECK(std::filesystem::exists(path + ".meta.json"));

  SUBCASE("corrupt magic is a format error with offset context") {
    std::ofstream os(path, std::ios::binary);
    os << "GARBAGE!" << std::string(64, '\0');
    os.close();
    CHECK_THROWS_WITH_AS(read_channel_data(path), doctest::Contains("offset 0"), FormatError);
  }
  SUBCASE("truncated payload is a format error") {
    std::filesystem::resize_file(path, 64);
    CHECK_THROWS_AS(read_channel_data(path), FormatError);
  }
}
