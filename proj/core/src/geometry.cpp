#include "sosmap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "sosmap/errors.hpp"

namespace sosmap {

namespace {

void check_finite(const std::vector<double>& values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw ConfigError(std::string(what) + ": non-finite value");
  }
}

}  // namespace

ArrayGeometry::ArrayGeometry(std::size_t element_count, double pitch) : pitch_(pitch) {
  if (element_count < 2) throw ConfigError("ArrayGeometry: element_count must be >= 2");
  if (!(pitch > 0.0)) throw ConfigError("ArrayGeometry: pitch must be > 0");
  positions_.resize(element_count);
  const double half = 0.5 * static_cast<double>(element_count - 1);
  for (std::size_t i = 0; i < element_count; ++i) {
    positions_[i] = {(static_cast<double>(i) - half) * pitch, 0.0};
  }
}

ArrayGeometry::ArrayGeometry(std::vector<Vec2> positions, double pitch)
    : positions_(std::move(positions)), pitch_(pitch) {
  if (positions_.size() < 2) throw ConfigError("ArrayGeometry: element_count must be >= 2");
  if (!(pitch_ > 0.0)) throw ConfigError("ArrayGeometry: pitch must be > 0");
  double sum_x = 0.0;
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    if (positions_[i].z != 0.0) throw ConfigError("ArrayGeometry: elements must lie at z = 0");
    if (i > 0 && !(positions_[i].x > positions_[i - 1].x)) {
      throw ConfigError("ArrayGeometry: positions must be strictly increasing in x");
    }
    sum_x += positions_[i].x;
  }
  if (std::abs(sum_x) > 1e-12) {
    throw ConfigError("ArrayGeometry: positions must be centered on x = 0");
  }
}

void PulseModel::validate() const {
  if (!(center_frequency > 0.0)) throw ConfigError("PulseModel: center_frequency must be > 0");
  if (!(sampling_frequency >= 4.0 * center_frequency)) {
    throw ConfigError("PulseModel: sampling_frequency must be >= 4x center_frequency");
  }
  if (!(fractional_bandwidth > 0.0) || fractional_bandwidth > 1.0) {
    throw ConfigError("PulseModel: fractional_bandwidth must be in (0, 1]");
  }
  if (!(pulse_cycles > 0.0)) throw ConfigError("PulseModel: pulse_cycles must be > 0");
}

ImagingGrid::ImagingGrid(Vec2 origin, std::size_t n_lateral, std::size_t n_depth,
                         double spacing_lateral, double spacing_depth)
    : origin_(origin), n_lateral_(n_lateral), n_depth_(n_depth),
      dx_(spacing_lateral), dz_(spacing_depth) {
  if (n_lateral_ < 2 || n_depth_ < 2) {
    throw ConfigError("ImagingGrid: n_lateral and n_depth must be >= 2");
  }
  if (!(dx_ > 0.0) || !(dz_ > 0.0)) throw ConfigError("ImagingGrid: spacings must be > 0");
  if (!std::isfinite(origin_.x) || !std::isfinite(origin_.z)) {
    throw ConfigError("ImagingGrid: origin must be finite");
  }
}

SoSGrid::SoSGrid(ImagingGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.n_pixels()) {
    throw ConfigError("SoSGrid: values size does not match grid");
  }
  check_finite(values_, "SoSGrid");
}

SoSGrid::SoSGrid(ImagingGrid grid, double value)
    : grid_(grid), values_(grid.n_pixels(), value) {
  if (!std::isfinite(value)) throw ConfigError("SoSGrid: non-finite value");
}

double SoSGrid::sample(Vec2 p) const {
  const std::size_t nl = grid_.n_lateral();
  const std::size_t nd = grid_.n_depth();
  double fx = (p.x - grid_.origin().x) / grid_.spacing_lateral();
  double fz = (p.z - grid_.origin().z) / grid_.spacing_depth();
  fx = std::clamp(fx, 0.0, static_cast<double>(nl - 1));
  fz = std::clamp(fz, 0.0, static_cast<double>(nd - 1));
  const std::size_t i0 = std::min(static_cast<std::size_t>(fx), nl - 2);
  const std::size_t j0 = std::min(static_cast<std::size_t>(fz), nd - 2);
  const double tx = fx - static_cast<double>(i0);
  const double tz = fz - static_cast<double>(j0);
  const double c00 = at(j0, i0);
  const double c01 = at(j0, i0 + 1);
  const double c10 = at(j0 + 1, i0);
  const double c11 = at(j0 + 1, i0 + 1);
  return (1.0 - tz) * ((1.0 - tx) * c00 + tx * c01) + tz * ((1.0 - tx) * c10 + tx * c11);
}

double SoSGrid::min_value() const { return *std::min_element(values_.begin(), values_.end()); }
double SoSGrid::max_value() const { return *std::max_element(values_.begin(), values_.end()); }

std::vector<Vec2> pixel_positions(const ImagingGrid& grid) {
  std::vector<Vec2> out;
  out.reserve(grid.n_pixels());
  for (std::size_t j = 0; j < grid.n_depth(); ++j) {
    for (std::size_t i = 0; i < grid.n_lateral(); ++i) {
      out.push_back(grid.pixel(i, j));
    }
  }
  return out;
}

Vec2 normalize_coords(const ImagingGrid& grid, Vec2 p) {
  const Vec2 lo = grid.hull_min();
  const Vec2 hi = grid.hull_max();
  auto check = [](double v, double a, double b, const char* name) {
    // Tolerate rounding at the hull boundary itself.
    const double tol = 1e-12 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
    if (v < a - tol || v > b + tol) {
      std::ostringstream msg;
      msg << "normalize_coords: coordinate " << name << " = " << v << " outside [" << a
          << ", " << b << "]";
      throw std::domain_error(msg.str());
    }
  };
  check(p.x, lo.x, hi.x, "x");
  check(p.z, lo.z, hi.z, "z");
  return {(p.x - lo.x) / (hi.x - lo.x), (p.z - lo.z) / (hi.z - lo.z)};
}

Vec2 denormalize_coords(const ImagingGrid& grid, Vec2 unit) {
  const Vec2 lo = grid.hull_min();
  const Vec2 hi = grid.hull_max();
  return {lo.x + unit.x * (hi.x - lo.x), lo.z + unit.z * (hi.z - lo.z)};
}

}  // namespace sosmap
