#include "sosmap/siren.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sosmap/errors.hpp"
#include "sosmap/parallel.hpp"
#include "sosmap/random.hpp"

namespace sosmap {

std::size_t SirenNetwork::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    n += layer_sizes[l] * layer_sizes[l + 1] + layer_sizes[l + 1];
  }
  return n;
}

void SirenNetwork::validate() const {
  if (layer_sizes.size() < 2) throw ConfigError("SirenNetwork: need at least one layer");
  if (layer_sizes.front() != 2) throw ConfigError("SirenNetwork: input width must be 2");
  if (layer_sizes.back() != 1) throw ConfigError("SirenNetwork: output width must be 1");
  if (!(omega > 0.0)) throw ConfigError("SirenNetwork: omega must be > 0");
  const std::size_t n_layers = layer_sizes.size() - 1;
  if (weights.size() != n_layers || biases.size() != n_layers) {
    throw ConfigError("SirenNetwork: layer count mismatch");
  }
  for (std::size_t l = 0; l < n_layers; ++l) {
    if (weights[l].size() != layer_sizes[l] * layer_sizes[l + 1] ||
        biases[l].size() != layer_sizes[l + 1]) {
      throw ConfigError("SirenNetwork: parameter shape mismatch at layer " + std::to_string(l));
    }
    for (double w : weights[l]) {
      if (!std::isfinite(w)) throw ConfigError("SirenNetwork: non-finite weight");
    }
    for (double b : biases[l]) {
      if (!std::isfinite(b)) throw ConfigError("SirenNetwork: non-finite bias");
    }
  }
}

SirenNetwork siren_init(const std::vector<std::size_t>& layer_sizes, double omega,
                        double output_scale, Seed seed) {
  SirenNetwork net;
  net.layer_sizes = layer_sizes;
  net.omega = omega;
  net.output_scale = output_scale;
  const std::size_t n_layers = layer_sizes.size() - 1;
  net.weights.resize(n_layers);
  net.biases.resize(n_layers);
  Rng rng = Rng::stream(seed, "siren_init");
  for (std::size_t l = 0; l < n_layers; ++l) {
    const double n_in = static_cast<double>(layer_sizes[l]);
    const double bound = (l == 0) ? 1.0 / n_in : std::sqrt(6.0 / n_in) / omega;
    net.weights[l].resize(layer_sizes[l] * layer_sizes[l + 1]);
    net.biases[l].resize(layer_sizes[l + 1]);
    for (double& w : net.weights[l]) w = rng.uniform(-bound, bound);
    for (double& b : net.biases[l]) b = rng.uniform(-bound, bound);
  }
  net.validate();
  return net;
}

namespace {

void check_coords(std::span<const Vec2> coords) {
  constexpr double kTol = 1e-12;
  for (std::size_t p = 0; p < coords.size(); ++p) {
    const Vec2 c = coords[p];
    if (c.x < -kTol || c.x > 1.0 + kTol || c.z < -kTol || c.z > 1.0 + kTol) {
      std::ostringstream msg;
      msg << "siren: coordinate " << p << " = (" << c.x << ", " << c.z
          << ") outside the unit square";
      throw std::domain_error(msg.str());
    }
  }
}

// Dense affine: out[o] = b[o] + sum_i w[o*in + i] * x[i]
inline void affine(const std::vector<double>& w, const std::vector<double>& b,
                   const double* x, std::size_t n_in, std::size_t n_out, double* out) {
  for (std::size_t o = 0; o < n_out; ++o) {
    const double* row = w.data() + o * n_in;
    double acc = b[o];
    for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * x[i];
    out[o] = acc;
  }
}

}  // namespace

std::vector<double> siren_forward(const SirenNetwork& net, std::span<const Vec2> coords) {
  net.validate();
  check_coords(coords);
  const std::size_t n_layers = net.layer_sizes.size() - 1;
  const std::size_t max_width =
      *std::max_element(net.layer_sizes.begin(), net.layer_sizes.end());
  std::vector<double> out(coords.size());

  parallel_for(coords.size(), 64, [&](std::size_t begin, std::size_t end) {
    std::vector<double> a(max_width), b(max_width);
    for (std::size_t p = begin; p < end; ++p) {
      a[0] = coords[p].x;
      a[1] = coords[p].z;
      double* cur = a.data();
      double* nxt = b.data();
      for (std::size_t l = 0; l < n_layers; ++l) {
        const std::size_t n_in = net.layer_sizes[l];
        const std::size_t n_out = net.layer_sizes[l + 1];
        affine(net.weights[l], net.biases[l], cur, n_in, n_out, nxt);
        if (l + 1 < n_layers) {
          for (std::size_t o = 0; o < n_out; ++o) nxt[o] = std::sin(net.omega * nxt[o]);
        }
        std::swap(cur, nxt);
      }
      out[p] = net.output_scale * cur[0];
    }
  });
  return out;
}

ParameterVector siren_backward(const SirenNetwork& net, std::span<const Vec2> coords,
                               std::span<const double> upstream) {
  net.validate();
  check_coords(coords);
  if (upstream.size() != coords.size()) {
    throw std::invalid_argument("siren_backward: upstream size mismatch");
  }
  const std::size_t n_layers = net.layer_sizes.size() - 1;
  const std::size_t n_params = net.parameter_count();

  // Canonical offsets: layer-major, weights then biases.
  std::vector<std::size_t> w_off(n_layers), b_off(n_layers);
  std::size_t off = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    w_off[l] = off;
    off += net.layer_sizes[l] * net.layer_sizes[l + 1];
    b_off[l] = off;
    off += net.layer_sizes[l + 1];
  }

  const std::size_t max_width =
      *std::max_element(net.layer_sizes.begin(), net.layer_sizes.end());
  std::vector<double> zero(n_params, 0.0);
  return block_reduce(
      coords.size(), 64, zero,
      [&](std::size_t begin, std::size_t end, std::vector<double>& grad) {
        // Per-coord scratch: activations h[l] and pre-activations u[l].
        std::vector<std::vector<double>> h(n_layers + 1);
        std::vector<std::vector<double>> u(n_layers);
        for (std::size_t l = 0; l <= n_layers; ++l) h[l].resize(net.layer_sizes[l]);
        for (std::size_t l = 0; l < n_layers; ++l) u[l].resize(net.layer_sizes[l + 1]);
        std::vector<double> delta(max_width), delta_prev(max_width);

        for (std::size_t p = begin; p < end; ++p) {
          h[0][0] = coords[p].x;
          h[0][1] = coords[p].z;
          for (std::size_t l = 0; l < n_layers; ++l) {
            affine(net.weights[l], net.biases[l], h[l].data(), net.layer_sizes[l],
                   net.layer_sizes[l + 1], u[l].data());
            if (l + 1 < n_layers) {
              for (std::size_t o = 0; o < net.layer_sizes[l + 1]; ++o) {
                h[l + 1][o] = std::sin(net.omega * u[l][o]);
              }
            } else {
              h[l + 1][0] = u[l][0];
            }
          }

          delta[0] = upstream[p] * net.output_scale;
          for (std::size_t li = n_layers; li-- > 0;) {
            const std::size_t n_in = net.layer_sizes[li];
            const std::size_t n_out = net.layer_sizes[li + 1];
            double* gw = grad.data() + w_off[li];
            double* gb = grad.data() + b_off[li];
            for (std::size_t o = 0; o < n_out; ++o) {
              const double d = delta[o];
              if (d == 0.0) continue;
              double* row = gw + o * n_in;
              const double* hin = h[li].data();
              for (std::size_t i = 0; i < n_in; ++i) row[i] += d * hin[i];
              gb[o] += d;
            }
            if (li == 0) break;
            for (std::size_t i = 0; i < n_in; ++i) {
              double acc = 0.0;
              for (std::size_t o = 0; o < n_out; ++o) {
                acc += net.weights[li][o * n_in + i] * delta[o];
              }
              // d sin(omega u)/du = omega cos(omega u)
              delta_prev[i] = acc * net.omega * std::cos(net.omega * u[li - 1][i]);
            }
            std::swap(delta, delta_prev);
          }
        }
      },
      [](std::vector<double>& acc, const std::vector<double>& part) {
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += part[i];
      });
}

ParameterVector siren_pack(const SirenNetwork& net) {
  ParameterVector out;
  out.reserve(net.parameter_count());
  for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
    out.insert(out.end(), net.weights[l].begin(), net.weights[l].end());
    out.insert(out.end(), net.biases[l].begin(), net.biases[l].end());
  }
  return out;
}

void siren_unpack(std::span<const double> params, SirenNetwork& net) {
  if (params.size() != net.parameter_count()) {
    throw std::invalid_argument("siren_unpack: parameter count mismatch");
  }
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
    std::copy(params.begin() + off, params.begin() + off + net.weights[l].size(),
              net.weights[l].begin());
    off += net.weights[l].size();
    std::copy(params.begin() + off, params.begin() + off + net.biases[l].size(),
              net.biases[l].begin());
    off += net.biases[l].size();
  }
}

namespace {
constexpr char kCkptMagic[8] = {'S', 'I', 'R', 'E', 'N', 'C', 'K', 'P'};
constexpr std::uint8_t kCkptVersion = 1;
}

void write_checkpoint(const std::string& path, const SirenNetwork& net) {
  net.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError(path + ": cannot open for writing");
  os.write(kCkptMagic, sizeof(kCkptMagic));
  os.write(reinterpret_cast<const char*>(&kCkptVersion), 1);
  const auto n_sizes = static_cast<std::uint32_t>(net.layer_sizes.size());
  os.write(reinterpret_cast<const char*>(&n_sizes), sizeof(n_sizes));
  for (std::size_t s : net.layer_sizes) {
    const auto v = static_cast<std::uint32_t>(s);
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  os.write(reinterpret_cast<const char*>(&net.omega), sizeof(double));
  os.write(reinterpret_cast<const char*>(&net.output_scale), sizeof(double));
  const ParameterVector params = siren_pack(net);
  os.write(reinterpret_cast<const char*>(params.data()),
           static_cast<std::streamsize>(params.size() * sizeof(double)));
  if (!os) throw FormatError(path + ": write failed");
}

SirenNetwork read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(path + ": cannot open");
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kCkptMagic, sizeof(kCkptMagic)) != 0) {
    throw FormatError(path + ": bad magic (not a network checkpoint)");
  }
  std::uint8_t version = 0;
  is.read(reinterpret_cast<char*>(&version), 1);
  if (!is || version != kCkptVersion) {
    throw FormatError(path + ": unsupported checkpoint version");
  }
  std::uint32_t n_sizes = 0;
  is.read(reinterpret_cast<char*>(&n_sizes), sizeof(n_sizes));
  if (!is || n_sizes < 2 || n_sizes > 64) throw FormatError(path + ": implausible layer count");
  SirenNetwork net;
  net.layer_sizes.resize(n_sizes);
  for (auto& s : net.layer_sizes) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!is || v == 0) throw FormatError(path + ": bad layer size");
    s = v;
  }
  is.read(reinterpret_cast<char*>(&net.omega), sizeof(double));
  is.read(reinterpret_cast<char*>(&net.output_scale), sizeof(double));
  if (!is) throw FormatError(path + ": truncated header");
  const std::size_t n_layers = net.layer_sizes.size() - 1;
  net.weights.resize(n_layers);
  net.biases.resize(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    net.weights[l].resize(net.layer_sizes[l] * net.layer_sizes[l + 1]);
    net.biases[l].resize(net.layer_sizes[l + 1]);
  }
  ParameterVector params(net.parameter_count());
  if (!is.read(reinterpret_cast<char*>(params.data()),
               static_cast<std::streamsize>(params.size() * sizeof(double)))) {
    throw FormatError(path + ": truncated parameter payload");
  }
  siren_unpack(params, net);
  net.validate();
  return net;
}

}  // namespace sosmap
