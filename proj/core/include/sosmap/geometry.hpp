#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace sosmap {

// 2D point in the imaging plane. x is lateral (along the array),
// z is depth (away from the array face). Units are meters unless noted.
struct Vec2 {
  double x = 0.0;
  double z = 0.0;
};

inline double distance(Vec2 a, Vec2 b) {
  return std::hypot(a.x - b.x, a.z - b.z);
}

// Linear transducer array. All elements sit on the z = 0 line, centered
// on x = 0, positions strictly increasing in x.
class ArrayGeometry {
 public:
  // Evenly spaced elements at pitch [m], centered on x = 0.
  ArrayGeometry(std::size_t element_count, double pitch);
  // Explicit positions, validated against the same invariants.
  ArrayGeometry(std::vector<Vec2> positions, double pitch);

  std::size_t element_count() const { return positions_.size(); }
  double pitch() const { return pitch_; }
  Vec2 element(std::size_t i) const { return positions_[i]; }
  const std::vector<Vec2>& elements() const { return positions_; }
  double aperture_width() const { return positions_.back().x - positions_.front().x; }

 private:
  std::vector<Vec2> positions_;
  double pitch_ = 0.0;
};

// Pulse-echo excitation model: Gaussian-enveloped cosine at the center
// frequency. The envelope width follows from the fractional bandwidth,
// see pulse_sigma() in simulate.hpp.
struct PulseModel {
  double center_frequency = 5e6;     // [Hz]
  double sampling_frequency = 25e6;  // [Hz], must be >= 4x center
  double fractional_bandwidth = 0.6; // (0, 1]
  double pulse_cycles = 2.0;         // nominal carrier cycles in the pulse

  void validate() const;
};

// Rectilinear pixel/node grid. Pixel (i, j) sits at
// origin + (i * spacing_lateral, j * spacing_depth), i lateral, j depth.
class ImagingGrid {
 public:
  ImagingGrid(Vec2 origin, std::size_t n_lateral, std::size_t n_depth,
              double spacing_lateral, double spacing_depth);

  Vec2 origin() const { return origin_; }
  std::size_t n_lateral() const { return n_lateral_; }
  std::size_t n_depth() const { return n_depth_; }
  std::size_t n_pixels() const { return n_lateral_ * n_depth_; }
  double spacing_lateral() const { return dx_; }
  double spacing_depth() const { return dz_; }

  Vec2 pixel(std::size_t i_lateral, std::size_t j_depth) const {
    return {origin_.x + static_cast<double>(i_lateral) * dx_,
            origin_.z + static_cast<double>(j_depth) * dz_};
  }

  // Hull of the grid nodes (corner to corner).
  Vec2 hull_min() const { return origin_; }
  Vec2 hull_max() const {
    return {origin_.x + static_cast<double>(n_lateral_ - 1) * dx_,
            origin_.z + static_cast<double>(n_depth_ - 1) * dz_};
  }

  // Cell-coverage box: hull padded by half a cell on each side. Its area
  // equals n_lateral*spacing_lateral x n_depth*spacing_depth.
  Vec2 coverage_min() const { return {origin_.x - 0.5 * dx_, origin_.z - 0.5 * dz_}; }
  Vec2 coverage_max() const {
    Vec2 m = hull_max();
    return {m.x + 0.5 * dx_, m.z + 0.5 * dz_};
  }
  double coverage_area() const {
    return static_cast<double>(n_lateral_) * dx_ * static_cast<double>(n_depth_) * dz_;
  }

  bool operator==(const ImagingGrid& o) const {
    return origin_.x == o.origin_.x && origin_.z == o.origin_.z &&
           n_lateral_ == o.n_lateral_ && n_depth_ == o.n_depth_ &&
           dx_ == o.dx_ && dz_ == o.dz_;
  }

 private:
  Vec2 origin_;
  std::size_t n_lateral_ = 0;
  std::size_t n_depth_ = 0;
  double dx_ = 0.0;
  double dz_ = 0.0;
};

// Speed-of-sound values [m/s] on an ImagingGrid, stored row-major with the
// depth index j as the row: value(j, i) = values()[j * n_lateral + i].
class SoSGrid {
 public:
  SoSGrid(ImagingGrid grid, std::vector<double> values);
  // Constant map.
  SoSGrid(ImagingGrid grid, double value);

  const ImagingGrid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  double at(std::size_t j_depth, std::size_t i_lateral) const {
    return values_[j_depth * grid_.n_lateral() + i_lateral];
  }
  double& at(std::size_t j_depth, std::size_t i_lateral) {
    return values_[j_depth * grid_.n_lateral() + i_lateral];
  }

  // Bilinear interpolation of the map, with coordinates clamped to the grid
  // hull (constant extension outside, e.g. between the array and the first
  // pixel row).
  double sample(Vec2 p) const;

  double min_value() const;
  double max_value() const;

 private:
  ImagingGrid grid_;
  std::vector<double> values_;
};

// 64-bit seed for all pseudo-randomness; see random.hpp for the generator.
struct Seed {
  std::uint64_t value = 0;
};

// Grid node positions in row-major (depth-major) order:
// j = 0..n_depth-1 outer, i = 0..n_lateral-1 inner.
std::vector<Vec2> pixel_positions(const ImagingGrid& grid);

// Affine map sending the grid hull corners to the unit square corners.
// Throws std::domain_error naming the offending coordinate when p lies
// outside the hull.
Vec2 normalize_coords(const ImagingGrid& grid, Vec2 p);

// Exact inverse of normalize_coords on [0,1]^2.
Vec2 denormalize_coords(const ImagingGrid& grid, Vec2 unit);

}  // namespace sosmap
