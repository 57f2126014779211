#include "sosmap/phantom.hpp"

#include <cmath>
#include <sstream>

#include "sosmap/errors.hpp"
#include "sosmap/random.hpp"

namespace sosmap {

void PhantomSpec::validate(const ImagingGrid& grid) const {
  auto check_sos = [](double v, const char* what) {
    if (!(v >= 1300.0 && v <= 1800.0)) {
      std::ostringstream msg;
      msg << "PhantomSpec: " << what << " = " << v << " outside [1300, 1800] m/s";
      throw ConfigError(msg.str());
    }
  };
  check_sos(background_sos, "background_sos");
  const Vec2 lo = grid.hull_min();
  const Vec2 hi = grid.hull_max();
  for (std::size_t k = 0; k < inclusions.size(); ++k) {
    const Inclusion& inc = inclusions[k];
    if (!(inc.radius > 0.0)) {
      throw ConfigError("PhantomSpec: inclusion radius must be > 0");
    }
    check_sos(inc.sos, "inclusion sos");
    if (inc.center.x - inc.radius < lo.x || inc.center.x + inc.radius > hi.x ||
        inc.center.z - inc.radius < lo.z || inc.center.z + inc.radius > hi.z) {
      std::ostringstream msg;
      msg << "PhantomSpec: inclusion " << k << " does not fit inside the grid";
      throw ConfigError(msg.str());
    }
  }
  if (!(scatterer_density > 0.0)) {
    throw ConfigError("PhantomSpec: scatterer_density must be > 0");
  }
}

SoSGrid phantom_to_sos_grid(const PhantomSpec& spec, const ImagingGrid& grid) {
  std::vector<double> values(grid.n_pixels(), spec.background_sos);
  for (std::size_t j = 0; j < grid.n_depth(); ++j) {
    for (std::size_t i = 0; i < grid.n_lateral(); ++i) {
      const Vec2 p = grid.pixel(i, j);
      // Innermost = smallest containing circle; later entries win ties.
      double best_radius = 0.0;
      const Inclusion* best = nullptr;
      for (const Inclusion& inc : spec.inclusions) {
        if (distance(p, inc.center) < inc.radius &&
            (best == nullptr || inc.radius <= best_radius)) {
          best = &inc;
          best_radius = inc.radius;
        }
      }
      if (best != nullptr) values[j * grid.n_lateral() + i] = best->sos;
    }
  }
  return SoSGrid(grid, std::move(values));
}

ScattererField sample_scatterers(const PhantomSpec& spec, const ImagingGrid& grid, Seed seed) {
  const double area_mm2 = grid.coverage_area() * 1e6;
  const auto count = static_cast<std::size_t>(std::llround(spec.scatterer_density * area_mm2));
  if (count == 0) throw ConfigError("sample_scatterers: empty scatterer field");

  Rng rng = Rng::stream(seed, "scatterers");
  const Vec2 lo = grid.coverage_min();
  const Vec2 hi = grid.coverage_max();
  ScattererField field;
  field.seed = seed;
  field.positions.resize(count);
  field.amplitudes.resize(count);
  // Draw order per scatterer is x, z, amplitude.
  for (std::size_t s = 0; s < count; ++s) {
    field.positions[s].x = rng.uniform(lo.x, hi.x);
    field.positions[s].z = rng.uniform(lo.z, hi.z);
    field.amplitudes[s] = rng.normal();
  }
  return field;
}

}  // namespace sosmap
