#include "sosmap/estimator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "sosmap/parallel.hpp"

namespace sosmap {

AdamState::AdamState(std::size_t n_params, double learning_rate)
    : m(n_params, 0.0), v(n_params, 0.0), lr(learning_rate) {}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad) {
  if (params.size() != state.m.size() || grad.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: size mismatch");
  }
  for (double g : grad) {
    if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

std::vector<std::size_t> SirenLayout::layer_sizes() const {
  std::vector<std::size_t> sizes;
  sizes.push_back(2);
  for (std::size_t l = 0; l < hidden_layers; ++l) sizes.push_back(hidden_units);
  sizes.push_back(1);
  return sizes;
}

void EstimationConfig::validate() const {
  if (epochs < 1) throw ConfigError("EstimationConfig: epochs must be >= 1");
  if (!(clamp_min < clamp_max)) throw ConfigError("EstimationConfig: clamp min must be < max");
  if (!(alpha >= 0.0)) throw ConfigError("EstimationConfig: alpha must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("EstimationConfig: learning_rate must be > 0");
  if (!(f_number > 0.0)) throw ConfigError("EstimationConfig: f_number must be > 0");
  if (!(param_scale > 0.0)) throw ConfigError("EstimationConfig: param_scale must be > 0");
  if (bmode_upsample < 1) throw ConfigError("EstimationConfig: bmode_upsample must be >= 1");
  if (siren.hidden_layers < 1 || siren.hidden_units < 1) {
    throw ConfigError("EstimationConfig: siren layout must have hidden layers and units");
  }
}

SoSGrid compose_sos(std::span<const double> delta, const SoSGrid& c0, double lo, double hi,
                    std::vector<std::uint8_t>* clamped) {
  if (delta.size() != c0.values().size()) {
    throw std::invalid_argument("compose_sos: delta size mismatch");
  }
  std::vector<double> values(delta.size());
  if (clamped != nullptr) clamped->assign(delta.size(), 0);
  for (std::size_t i = 0; i < delta.size(); ++i) {
    const double raw = c0.values()[i] + delta[i];
    if (raw < lo) {
      values[i] = lo;
      if (clamped != nullptr) (*clamped)[i] = 1;
    } else if (raw > hi) {
      values[i] = hi;
      if (clamped != nullptr) (*clamped)[i] = 1;
    } else {
      values[i] = raw;
    }
  }
  return SoSGrid(c0.grid(), std::move(values));
}

EstimationProblem::EstimationProblem(const AnalyticChannelData& iq, const ArrayGeometry& geom,
                                     const SoSGrid& c0, const EstimationConfig& cfg)
    : iq_(&iq), geom_(&geom), c0_(c0), cfg_(cfg),
      das_(iq, geom, c0.grid(), cfg.f_number) {
  cfg_.validate();
  coords_.reserve(c0.grid().n_pixels());
  for (const Vec2& p : pixel_positions(c0.grid())) {
    coords_.push_back(normalize_coords(c0.grid(), p));
  }
  if (cfg_.mode == EstimationMode::inr) {
    net_ = siren_init(cfg_.siren.layer_sizes(), cfg_.siren.omega, cfg_.siren.output_scale,
                      cfg_.seed);
    n_params_ = net_->parameter_count();
  } else {
    n_params_ = c0.values().size();
  }
}

ParameterVector EstimationProblem::initial_parameters() const {
  if (cfg_.mode == EstimationMode::inr) return siren_pack(*net_);
  return ParameterVector(n_params_, 0.0);  // Delta-c = 0 at start
}

const SirenNetwork* EstimationProblem::network() const {
  return net_.has_value() ? &*net_ : nullptr;
}

std::vector<double> EstimationProblem::delta_for(std::span<const double> params) {
  if (params.size() != n_params_) {
    throw std::invalid_argument("EstimationProblem: parameter count mismatch");
  }
  if (cfg_.mode == EstimationMode::inr) {
    siren_unpack(params, *net_);
    return siren_forward(*net_, coords_);
  }
  std::vector<double> delta(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) delta[i] = cfg_.param_scale * params[i];
  return delta;
}

SoSGrid EstimationProblem::sos_for(std::span<const double> params) {
  const std::vector<double> delta = delta_for(params);
  return compose_sos(delta, c0_, cfg_.clamp_min, cfg_.clamp_max);
}

LossBreakdown EstimationProblem::loss(std::span<const double> params) {
  const std::vector<double> delta = delta_for(params);
  const SoSGrid sos = compose_sos(delta, c0_, cfg_.clamp_min, cfg_.clamp_max);
  const ApertureStack stack = das_.forward(sos);
  return total_loss(stack, sos, cfg_.alpha);
}

LossBreakdown EstimationProblem::loss_and_gradient(std::span<const double> params,
                                                   std::span<double> grad) {
  if (grad.size() != n_params_) {
    throw std::invalid_argument("EstimationProblem: gradient size mismatch");
  }
  const std::vector<double> delta = delta_for(params);
  std::vector<std::uint8_t> clamped;
  const SoSGrid sos = compose_sos(delta, c0_, cfg_.clamp_min, cfg_.clamp_max, &clamped);
  const ApertureStack stack = das_.forward(sos);

  std::vector<std::complex<double>> stack_grad;
  std::vector<double> sos_grad;  // alpha-weighted TV part
  const LossBreakdown loss = total_loss(stack, sos, cfg_.alpha, &stack_grad, &sos_grad);

  // Chain the phase term through the beamformer, add the TV part, and gate
  // clamped cells (zero gradient pass-through).
  std::vector<double> d_sos = das_.adjoint(stack_grad);
  for (std::size_t i = 0; i < d_sos.size(); ++i) {
    d_sos[i] = clamped[i] ? 0.0 : d_sos[i] + sos_grad[i];
  }

  if (cfg_.mode == EstimationMode::inr) {
    const ParameterVector g = siren_backward(*net_, coords_, d_sos);
    std::copy(g.begin(), g.end(), grad.begin());
  } else {
    for (std::size_t i = 0; i < d_sos.size(); ++i) grad[i] = cfg_.param_scale * d_sos[i];
  }
  return loss;
}

EstimationResult run_estimation(const AnalyticChannelData& iq, const ArrayGeometry& geom,
                                const SoSGrid& c0, const EstimationConfig& cfg,
                                const CheckpointFn& on_checkpoint) {
  const auto start = std::chrono::steady_clock::now();
  EstimationProblem problem(iq, geom, c0, cfg);
  ParameterVector params = problem.initial_parameters();
  ParameterVector grad(params.size(), 0.0);
  AdamState adam(params.size(), cfg.learning_rate);

  std::vector<LossBreakdown> trace;
  trace.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const LossBreakdown loss = problem.loss_and_gradient(params, grad);
    if (!std::isfinite(loss.total)) {
      double gnorm = 0.0;
      for (double g : grad) gnorm += g * g;
      std::ostringstream msg;
      msg << "run_estimation: non-finite loss at epoch " << epoch;
      throw EstimationAbort(msg.str(), epoch, std::sqrt(gnorm), problem.sos_for(params));
    }
    trace.push_back(loss);
    try {
      adam_step(adam, params, grad);
    } catch (const NumericError&) {
      double gnorm = 0.0;
      for (double g : grad) {
        if (std::isfinite(g)) gnorm += g * g;
      }
      std::ostringstream msg;
      msg << "run_estimation: non-finite gradient at epoch " << epoch;
      throw EstimationAbort(msg.str(), epoch, std::sqrt(gnorm), problem.sos_for(params));
    }
    if (cfg.checkpoint_every > 0 && on_checkpoint &&
        (epoch + 1) % cfg.checkpoint_every == 0) {
      const SoSGrid snapshot_map = problem.sos_for(params);
      on_checkpoint(EstimationSnapshot{epoch + 1, snapshot_map, problem.network()});
    }
  }

  SoSGrid final_map = problem.sos_for(params);

  // Render the final B-mode with the estimated map on a refined grid.
  const ImagingGrid& g = c0.grid();
  const auto f = static_cast<std::size_t>(cfg.bmode_upsample);
  const ImagingGrid render_grid(g.origin(), (g.n_lateral() - 1) * f + 1,
                                (g.n_depth() - 1) * f + 1, g.spacing_lateral() / static_cast<double>(f),
                                g.spacing_depth() / static_cast<double>(f));
  const ApertureStack render_stack = das_beamform(iq, geom, render_grid, final_map, cfg.f_number);
  BModeImage image = bmode(render_stack, render_grid, cfg.bmode_dynamic_range);

  EstimationResult result{std::move(final_map), std::move(trace), std::move(image), 0.0};
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace sosmap
