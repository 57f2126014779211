#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "sosmap/beamform.hpp"
#include "sosmap/geometry.hpp"
#include "sosmap/phantom.hpp"
#include "sosmap/signal.hpp"
#include "sosmap/simulate.hpp"

namespace testutil {

// Small scene that runs the whole pipeline in well under a second.
struct MiniScene {
  sosmap::ArrayGeometry geom{8, 0.5e-3};
  sosmap::PulseModel pulse{5e6, 25e6, 0.6, 2.0};
  sosmap::ImagingGrid grid{{-3.5e-3, 4e-3}, 8, 10, 1e-3, 1e-3};
  std::size_t n_samples = 1024;
};

inline sosmap::PhantomSpec mini_phantom(double inclusion_sos, double density = 1.5) {
  sosmap::PhantomSpec spec;
  spec.name = "mini";
  spec.background_sos = 1540.0;
  spec.scatterer_density = density;
  if (inclusion_sos != 1540.0) {
    spec.inclusions.push_back({{0.0, 8e-3}, 2.5e-3, inclusion_sos});
  }
  return spec;
}

inline sosmap::AnalyticChannelData mini_iq(const MiniScene& scene,
                                           const sosmap::PhantomSpec& spec,
                                           sosmap::Seed seed) {
  const sosmap::SoSGrid truth = sosmap::phantom_to_sos_grid(spec, scene.grid);
  const sosmap::ScattererField field = sosmap::sample_scatterers(spec, scene.grid, seed);
  const sosmap::ChannelData rf =
      sosmap::simulate_rf(scene.geom, scene.pulse, truth, field, scene.n_samples);
  return sosmap::analytic_signal(rf);
}

inline double rel_err(double got, double want) {
  const double scale = std::max(std::abs(got), std::abs(want));
  return scale == 0.0 ? 0.0 : std::abs(got - want) / scale;
}

// Relative mismatch with an absolute floor for near-zero pairs.
inline bool close(double got, double want, double rel, double abs_floor = 0.0) {
  return std::abs(got - want) <= rel * std::max(std::abs(got), std::abs(want)) + abs_floor;
}

}  // namespace testutil
