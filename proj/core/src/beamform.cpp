#include "sosmap/beamform.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "sosmap/errors.hpp"
#include "sosmap/parallel.hpp"

namespace sosmap {

namespace {

constexpr double kRayStepMax = 1e-4;  // [m], midpoint-rule step bound

// Flat view of a SoS map for hot loops: bilinear interpolation with
// coordinates clamped to the hull (nearest-edge extension outside).
struct MapView {
  double ox, oz, inv_dx, inv_dz;
  std::size_t nl, nd;
  const double* v;

  explicit MapView(const SoSGrid& sos)
      : ox(sos.grid().origin().x), oz(sos.grid().origin().z),
        inv_dx(1.0 / sos.grid().spacing_lateral()), inv_dz(1.0 / sos.grid().spacing_depth()),
        nl(sos.grid().n_lateral()), nd(sos.grid().n_depth()), v(sos.values().data()) {}

  struct Cell {
    std::size_t idx[4];
    double w[4];
  };

  Cell locate(double x, double z) const {
    double fx = (x - ox) * inv_dx;
    double fz = (z - oz) * inv_dz;
    fx = std::clamp(fx, 0.0, static_cast<double>(nl - 1));
    fz = std::clamp(fz, 0.0, static_cast<double>(nd - 1));
    const std::size_t i0 = std::min(static_cast<std::size_t>(fx), nl - 2);
    const std::size_t j0 = std::min(static_cast<std::size_t>(fz), nd - 2);
    const double tx = fx - static_cast<double>(i0);
    const double tz = fz - static_cast<double>(j0);
    Cell c;
    c.idx[0] = j0 * nl + i0;
    c.idx[1] = c.idx[0] + 1;
    c.idx[2] = c.idx[0] + nl;
    c.idx[3] = c.idx[2] + 1;
    c.w[0] = (1.0 - tx) * (1.0 - tz);
    c.w[1] = tx * (1.0 - tz);
    c.w[2] = (1.0 - tx) * tz;
    c.w[3] = tx * tz;
    return c;
  }

  double sample(double x, double z) const {
    const Cell c = locate(x, z);
    return c.w[0] * v[c.idx[0]] + c.w[1] * v[c.idx[1]] + c.w[2] * v[c.idx[2]] +
           c.w[3] * v[c.idx[3]];
  }
};

double travel_time_impl(Vec2 src, Vec2 dst, const MapView& map) {
  const double dx = dst.x - src.x;
  const double dz = dst.z - src.z;
  const double dist = std::hypot(dx, dz);
  if (dist == 0.0) return 0.0;
  const auto n = static_cast<std::size_t>(std::ceil(dist / kRayStepMax));
  const double ds = dist / static_cast<double>(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  double t = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double a = (static_cast<double>(k) + 0.5) * inv_n;
    t += ds / map.sample(src.x + a * dx, src.z + a * dz);
  }
  return t;
}

void travel_time_adjoint_impl(Vec2 src, Vec2 dst, const MapView& map, double upstream,
                              double* grad) {
  const double dx = dst.x - src.x;
  const double dz = dst.z - src.z;
  const double dist = std::hypot(dx, dz);
  if (dist == 0.0 || upstream == 0.0) return;
  const auto n = static_cast<std::size_t>(std::ceil(dist / kRayStepMax));
  const double ds = dist / static_cast<double>(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double a = (static_cast<double>(k) + 0.5) * inv_n;
    const MapView::Cell c = map.locate(src.x + a * dx, src.z + a * dz);
    const double cv = c.w[0] * map.v[c.idx[0]] + c.w[1] * map.v[c.idx[1]] +
                      c.w[2] * map.v[c.idx[2]] + c.w[3] * map.v[c.idx[3]];
    // d(ds / c)/d(node) = -ds * w_node / c^2
    const double coef = -upstream * ds / (cv * cv);
    grad[c.idx[0]] += coef * c.w[0];
    grad[c.idx[1]] += coef * c.w[1];
    grad[c.idx[2]] += coef * c.w[2];
    grad[c.idx[3]] += coef * c.w[3];
  }
}

}  // namespace

double travel_time(Vec2 src, Vec2 dst, const SoSGrid& sos) {
  return travel_time_impl(src, dst, MapView(sos));
}

void travel_time_adjoint(Vec2 src, Vec2 dst, const SoSGrid& sos, double upstream,
                         std::span<double> grad) {
  if (grad.size() != sos.values().size()) {
    throw std::invalid_argument("travel_time_adjoint: grad size mismatch");
  }
  travel_time_adjoint_impl(src, dst, MapView(sos), upstream, grad.data());
}

DasOperator::DasOperator(const AnalyticChannelData& iq, const ArrayGeometry& geom,
                         const ImagingGrid& pixels, double f_number)
    : iq_(&iq), geom_(&geom), grid_(pixels), f_number_(f_number),
      pixel_pos_(pixel_positions(pixels)) {
  if (!(f_number > 0.0)) throw ConfigError("DasOperator: f_number must be > 0");
  if (iq.n_tx != geom.element_count() || iq.n_rx != geom.element_count()) {
    throw ConfigError("DasOperator: channel count does not match array geometry");
  }
  tau_.resize(geom.element_count() * pixel_pos_.size());
}

ApertureStack DasOperator::forward(const SoSGrid& sos) {
  const std::size_t n_elem = geom_->element_count();
  const std::size_t n_pix = pixel_pos_.size();
  const MapView map(sos);

  parallel_for(n_elem * n_pix, 512, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      tau_[k] = travel_time_impl(geom_->element(k / n_pix), pixel_pos_[k % n_pix], map);
    }
  });

  ApertureStack stack;
  stack.n_pixels = n_pix;
  stack.n_rx = n_elem;
  stack.f_number = f_number_;
  stack.values.assign(n_pix * n_elem, {0.0, 0.0});
  stack.valid.assign(n_pix * n_elem, 0);

  const double half_aperture_per_depth = 1.0 / (2.0 * f_number_);
  parallel_for(n_pix, 16, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      const Vec2 px = pixel_pos_[p];
      const double max_offset = px.z * half_aperture_per_depth;
      for (std::size_t r = 0; r < n_elem; ++r) {
        if (std::abs(geom_->element(r).x - px.x) > max_offset) continue;
        stack.valid[p * n_elem + r] = 1;
        std::complex<double> acc{0.0, 0.0};
        const double tau_r = tau_[r * n_pix + p];
        for (std::size_t tx = 0; tx < n_elem; ++tx) {
          acc += interp_complex(iq_->trace(tx, r), iq_->sampling_frequency, iq_->t0,
                                tau_[tx * n_pix + p] + tau_r)
                     .value;
        }
        stack.values[p * n_elem + r] = acc;
      }
    }
  });

  last_sos_ = sos.values();
  last_sos_grid_.emplace(sos.grid());
  has_forward_ = true;
  return stack;
}

std::vector<double> DasOperator::adjoint(std::span<const std::complex<double>> dl_dstack) const {
  if (!has_forward_) throw std::logic_error("DasOperator::adjoint before forward");
  const std::size_t n_elem = geom_->element_count();
  const std::size_t n_pix = pixel_pos_.size();
  if (dl_dstack.size() != n_pix * n_elem) {
    throw std::invalid_argument("DasOperator::adjoint: dl_dstack size mismatch");
  }
  const SoSGrid sos(*last_sos_grid_, last_sos_);
  const MapView map(sos);
  const double half_aperture_per_depth = 1.0 / (2.0 * f_number_);

  // Chain dL/dstack through the interpolator slope to per-ray delay
  // sensitivities. Pixels own disjoint tau columns, so this phase is
  // race-free and order-independent.
  std::vector<double> dtau(n_elem * n_pix, 0.0);
  parallel_for(n_pix, 16, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      const Vec2 px = pixel_pos_[p];
      const double max_offset = px.z * half_aperture_per_depth;
      for (std::size_t r = 0; r < n_elem; ++r) {
        const std::complex<double> g = dl_dstack[p * n_elem + r];
        if (g.real() == 0.0 && g.imag() == 0.0) continue;
        if (std::abs(geom_->element(r).x - px.x) > max_offset) continue;
        const double tau_r = tau_[r * n_pix + p];
        for (std::size_t tx = 0; tx < n_elem; ++tx) {
          const auto d = interp_complex(iq_->trace(tx, r), iq_->sampling_frequency, iq_->t0,
                                        tau_[tx * n_pix + p] + tau_r)
                             .dvalue_dt;
          const double sens = g.real() * d.real() + g.imag() * d.imag();
          dtau[tx * n_pix + p] += sens;
          dtau[r * n_pix + p] += sens;
        }
      }
    }
  });

  // Scatter delay sensitivities along the rays into the grid. Fixed-size
  // blocks folded in order keep the reduction bit-deterministic.
  const std::size_t n_values = last_sos_.size();
  std::vector<double> zero(n_values, 0.0);
  return block_reduce(
      n_elem * n_pix, 256, zero,
      [&](std::size_t begin, std::size_t end, std::vector<double>& partial) {
        for (std::size_t k = begin; k < end; ++k) {
          if (dtau[k] == 0.0) continue;
          travel_time_adjoint_impl(geom_->element(k / n_pix), pixel_pos_[k % n_pix], map,
                                   dtau[k], partial.data());
        }
      },
      [](std::vector<double>& acc, const std::vector<double>& partial) {
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += partial[i];
      });
}

ApertureStack das_beamform(const AnalyticChannelData& iq, const ArrayGeometry& geom,
                           const ImagingGrid& pixels, const SoSGrid& sos, double f_number) {
  DasOperator op(iq, geom, pixels, f_number);
  return op.forward(sos);
}

BModeImage bmode(const ApertureStack& stack, const ImagingGrid& pixels,
                 double dynamic_range_db) {
  if (stack.n_pixels != pixels.n_pixels()) {
    throw ConfigError("bmode: stack does not match pixel grid");
  }
  if (!(dynamic_range_db > 0.0)) throw ConfigError("bmode: dynamic range must be > 0");
  std::vector<double> env(stack.n_pixels);
  double peak = 0.0;
  for (std::size_t p = 0; p < stack.n_pixels; ++p) {
    std::complex<double> sum{0.0, 0.0};
    for (std::size_t r = 0; r < stack.n_rx; ++r) sum += stack.values[p * stack.n_rx + r];
    env[p] = std::abs(sum);
    peak = std::max(peak, env[p]);
  }
  if (peak == 0.0) throw NumericError("bmode: no signal to display");
  BModeImage img;
  img.n_depth = pixels.n_depth();
  img.n_lateral = pixels.n_lateral();
  img.dynamic_range = dynamic_range_db;
  img.envelope_db.resize(stack.n_pixels);
  for (std::size_t p = 0; p < stack.n_pixels; ++p) {
    const double db = env[p] > 0.0 ? 20.0 * std::log10(env[p] / peak) : -dynamic_range_db;
    img.envelope_db[p] = std::max(db, -dynamic_range_db);
  }
  return img;
}

double coherence(const ApertureStack& stack) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t p = 0; p < stack.n_pixels; ++p) {
    std::complex<double> sum{0.0, 0.0};
    double power = 0.0;
    std::size_t n_valid = 0;
    for (std::size_t r = 0; r < stack.n_rx; ++r) {
      const auto s = stack.values[p * stack.n_rx + r];
      sum += s;
      power += std::norm(s);
      n_valid += stack.valid[p * stack.n_rx + r];
    }
    num += std::norm(sum);
    den += static_cast<double>(n_valid) * power;
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace sosmap
