#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sosmap/geometry.hpp"

namespace sosmap {

// Flat parameter storage in canonical order: layer-major, each layer's
// weights (row-major, out x in) before its biases.
using ParameterVector = std::vector<double>;

// Sine-activated MLP mapping normalized [0,1]^2 coordinates to a scalar
// speed correction [m/s]:
//   h_l = sin(omega * (W_l h_{l-1} + b_l)) for l < L, output affine,
// then multiplied by output_scale.
struct SirenNetwork {
  std::vector<std::size_t> layer_sizes;     // e.g. {2, 128, 128, 128, 1}
  double omega = 30.0;
  double output_scale = 100.0;
  std::vector<std::vector<double>> weights; // [layer][out*in], row-major
  std::vector<std::vector<double>> biases;  // [layer][out]

  std::size_t parameter_count() const;
  void validate() const;
};

// SIREN initialization: first-layer weights uniform in [-1/n_in, 1/n_in],
// deeper layers uniform in [-sqrt(6/n_in)/omega, +sqrt(6/n_in)/omega];
// biases drawn with the same bounds as their layer's weights. Reproducible
// per seed (sub-stream "siren_init").
SirenNetwork siren_init(const std::vector<std::size_t>& layer_sizes, double omega,
                        double output_scale, Seed seed);

// Batch forward pass; coords (x, z) must lie in [0,1]^2 (throws
// std::domain_error otherwise). Returns one Delta-c value [m/s] per coord.
std::vector<double> siren_forward(const SirenNetwork& net, std::span<const Vec2> coords);

// Exact reverse-mode gradient of sum_p upstream[p] * output(coords[p])
// w.r.t. every weight and bias, in canonical order. Deterministic at any
// thread count.
ParameterVector siren_backward(const SirenNetwork& net, std::span<const Vec2> coords,
                               std::span<const double> upstream);

// Lossless flat round-trip in canonical order.
ParameterVector siren_pack(const SirenNetwork& net);
void siren_unpack(std::span<const double> params, SirenNetwork& net);

// Checkpoint container: little-endian binary
//   magic "SIRENCKP" | u8 version=1 | u32 n_layers | u32 sizes[] |
//   f64 omega | f64 output_scale | f64 params[] (canonical order)
void write_checkpoint(const std::string& path, const SirenNetwork& net);
SirenNetwork read_checkpoint(const std::string& path);

}  // namespace sosmap
