#include "sosmap/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "sosmap/beamform.hpp"
#include "sosmap/errors.hpp"
#include "sosmap/parallel.hpp"

namespace sosmap {

namespace {
// Legs shorter than this are treated as this long in the 1/sqrt(d) decay.
constexpr double kMinLeg = 1e-4;  // [m]
}

double pulse_sigma(const PulseModel& pulse) {
  // -6 dB two-way (power) bandwidth of the Gaussian spectrum = fb * f0.
  const double k = std::sqrt(0.6 * std::numbers::ln10);
  return k / (std::numbers::pi * pulse.fractional_bandwidth * pulse.center_frequency);
}

double pulse_half_support(const PulseModel& pulse) {
  const double nominal = pulse.pulse_cycles / (2.0 * pulse.center_frequency);
  return std::max(nominal, 4.0 * pulse_sigma(pulse));
}

std::size_t min_required_samples(const ArrayGeometry& geom, const PulseModel& pulse,
                                 const SoSGrid& sos, const ScattererField& scatterers) {
  double max_path = 0.0;
  for (const Vec2& e : geom.elements()) {
    for (const Vec2& s : scatterers.positions) {
      max_path = std::max(max_path, distance(e, s));
    }
  }
  const double t_need = 2.0 * max_path / sos.min_value() + 2.0 * pulse_half_support(pulse);
  return static_cast<std::size_t>(std::ceil(t_need * pulse.sampling_frequency)) + 1;
}

ChannelData simulate_rf(const ArrayGeometry& geom, const PulseModel& pulse,
                        const SoSGrid& true_sos, const ScattererField& scatterers,
                        std::size_t n_samples) {
  pulse.validate();
  const std::size_t required = min_required_samples(geom, pulse, true_sos, scatterers);
  if (n_samples < required) {
    std::ostringstream msg;
    msg << "simulate_rf: n_samples = " << n_samples << " too small, need at least " << required;
    throw ConfigError(msg.str());
  }

  const std::size_t n_elem = geom.element_count();
  const std::size_t n_scat = scatterers.positions.size();
  const double fs = pulse.sampling_frequency;
  const double f0 = pulse.center_frequency;
  const double sigma = pulse_sigma(pulse);
  const double half_support = pulse_half_support(pulse);
  const double two_pi_f0 = 2.0 * std::numbers::pi * f0;
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);

  // One-way travel times and geometric leg lengths per (element, scatterer).
  std::vector<double> tau(n_elem * n_scat);
  std::vector<double> leg(n_elem * n_scat);
  parallel_for(n_elem * n_scat, 512, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const Vec2 e = geom.element(k / n_scat);
      const Vec2 s = scatterers.positions[k % n_scat];
      tau[k] = travel_time(e, s, true_sos);
      leg[k] = std::max(distance(e, s), kMinLeg);
    }
  });

  ChannelData out;
  out.n_tx = n_elem;
  out.n_rx = n_elem;
  out.n_samples = n_samples;
  out.sampling_frequency = fs;
  out.t0 = 0.0;
  out.rf.assign(n_elem * n_elem * n_samples, 0.0);

  // Pairs are independent; scatterer accumulation order inside a pair is
  // fixed, so the result is bit-deterministic at any thread count.
  parallel_for(n_elem * n_elem, 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t pair = begin; pair < end; ++pair) {
      const std::size_t tx = pair / n_elem;
      const std::size_t rx = pair % n_elem;
      auto trace = out.trace(tx, rx);
      for (std::size_t s = 0; s < n_scat; ++s) {
        const double t_arrival = tau[tx * n_scat + s] + tau[rx * n_scat + s];
        const double amp = scatterers.amplitudes[s] /
                           std::sqrt(leg[tx * n_scat + s] * leg[rx * n_scat + s]);
        if (amp == 0.0) continue;
        const auto k_lo = static_cast<std::ptrdiff_t>(std::ceil((t_arrival - half_support) * fs));
        const auto k_hi = static_cast<std::ptrdiff_t>(std::floor((t_arrival + half_support) * fs));
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(k_lo, 0);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(k_hi, static_cast<std::ptrdiff_t>(n_samples) - 1);
        for (std::ptrdiff_t k = lo; k <= hi; ++k) {
          const double dt = static_cast<double>(k) / fs - t_arrival;
          trace[static_cast<std::size_t>(k)] +=
              amp * std::exp(-dt * dt * inv_two_sigma2) * std::cos(two_pi_f0 * dt);
        }
      }
    }
  });
  return out;
}

namespace {

constexpr char kMagic[8] = {'U', 'S', 'R', 'F', 'C', 'H', 'A', 'N'};
constexpr std::uint32_t kContainerVersion = 1;

template <typename T>
void write_raw(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& is, const std::string& path, const char* what) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw FormatError(path + ": truncated while reading " + what + " at offset " +
                      std::to_string(static_cast<long long>(is.tellg())));
  }
  return v;
}

}  // namespace

void write_channel_data(const std::string& path, const ChannelData& data,
                        const std::string& extra_meta_json) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError(path + ": cannot open for writing");
  os.write(kMagic, sizeof(kMagic));
  write_raw(os, kContainerVersion);
  write_raw(os, static_cast<std::uint32_t>(data.n_tx));
  write_raw(os, static_cast<std::uint32_t>(data.n_rx));
  write_raw(os, static_cast<std::uint32_t>(data.n_samples));
  write_raw(os, data.sampling_frequency);
  write_raw(os, data.t0);
  std::vector<float> buf(data.rf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(data.rf[i]);
  os.write(reinterpret_cast<const char*>(buf.data()),
           static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!os) throw FormatError(path + ": write failed");
  os.close();

  nlohmann::json meta;
  meta["format"] = "usrfchan";
  meta["version"] = kContainerVersion;
  meta["n_tx"] = data.n_tx;
  meta["n_rx"] = data.n_rx;
  meta["n_samples"] = data.n_samples;
  meta["sampling_frequency_hz"] = data.sampling_frequency;
  meta["t0_s"] = data.t0;
  if (!extra_meta_json.empty()) {
    nlohmann::json extra = nlohmann::json::parse(extra_meta_json, nullptr, false);
    if (extra.is_discarded()) {
      throw ConfigError("write_channel_data: extra metadata is not valid JSON");
    }
    meta["extra"] = extra;
  }
  const std::string meta_path = path + ".meta.json";
  std::ofstream ms(meta_path);
  if (!ms) throw FormatError(meta_path + ": cannot open for writing");
  ms << meta.dump(2) << "\n";
}

ChannelData read_channel_data(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(path + ": cannot open");
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(path + ": bad magic at offset 0 (not a channel-data container)");
  }
  const auto version = read_raw<std::uint32_t>(is, path, "version");
  if (version != kContainerVersion) {
    throw FormatError(path + ": unsupported container version " + std::to_string(version));
  }
  ChannelData data;
  data.n_tx = read_raw<std::uint32_t>(is, path, "n_tx");
  data.n_rx = read_raw<std::uint32_t>(is, path, "n_rx");
  data.n_samples = read_raw<std::uint32_t>(is, path, "n_samples");
  data.sampling_frequency = read_raw<double>(is, path, "sampling_frequency");
  data.t0 = read_raw<double>(is, path, "t0");
  const std::size_t count = data.n_tx * data.n_rx * data.n_samples;
  if (count == 0 || count > (1ull << 31)) {
    throw FormatError(path + ": implausible dimensions");
  }
  std::vector<float> buf(count);
  if (!is.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(count * sizeof(float)))) {
    throw FormatError(path + ": truncated sample payload at offset " +
                      std::to_string(static_cast<long long>(is.tellg())));
  }
  data.rf.resize(count);
  for (std::size_t i = 0; i < count; ++i) data.rf[i] = static_cast<double>(buf[i]);
  return data;
}

}  // namespace sosmap
