#pragma once

#include <string>
#include <vector>

#include "sosmap/geometry.hpp"

namespace sosmap {

// Cylindrical (circular in-plane) inclusion with its own sound speed.
struct Inclusion {
  Vec2 center;          // [m]
  double radius = 0.0;  // [m]
  double sos = 1540.0;  // [m/s]
};

// Piecewise-constant phantom: background speed with circular inclusions.
struct PhantomSpec {
  std::string name;
  double background_sos = 1540.0;      // [m/s]
  std::vector<Inclusion> inclusions;
  double scatterer_density = 2.0;      // scatterers per mm^2

  // Throws ConfigError if radii are non-positive, SoS values leave
  // [1300, 1800] m/s, or an inclusion circle leaves the grid hull.
  void validate(const ImagingGrid& grid) const;
};

// Random point scatterers providing speckle.
struct ScattererField {
  std::vector<Vec2> positions;     // [m], within the grid coverage box
  std::vector<double> amplitudes;  // dimensionless, standard normal
  Seed seed;
};

// Rasterizes the phantom: each grid node takes the SoS of the innermost
// (smallest-radius) inclusion containing it, else the background.
SoSGrid phantom_to_sos_grid(const PhantomSpec& spec, const ImagingGrid& grid);

// Uniform scatterer positions over the grid cell-coverage box, standard
// normal amplitudes; count = round(density * coverage_area_mm2).
// Reproducible per seed (sub-stream "scatterers").
// Throws ConfigError when the count comes out zero.
ScattererField sample_scatterers(const PhantomSpec& spec, const ImagingGrid& grid, Seed seed);

}  // namespace sosmap
