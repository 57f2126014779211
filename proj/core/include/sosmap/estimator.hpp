#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sosmap/beamform.hpp"
#include "sosmap/errors.hpp"
#include "sosmap/loss.hpp"
#include "sosmap/siren.hpp"

namespace sosmap {

// Adam optimizer state over one flat parameter vector.
struct AdamState {
  std::size_t step = 0;
  std::vector<double> m;  // first moment
  std::vector<double> v;  // second moment
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(std::size_t n_params, double learning_rate = 1e-3);
};

// Standard Adam with bias correction. Throws NumericError on non-finite
// gradients.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad);

enum class EstimationMode { inr, grid_baseline };

struct SirenLayout {
  std::size_t hidden_layers = 3;
  std::size_t hidden_units = 128;
  double omega = 30.0;
  double output_scale = 100.0;

  std::vector<std::size_t> layer_sizes() const;
};

struct EstimationConfig {
  EstimationMode mode = EstimationMode::inr;
  int epochs = 1000;
  double alpha = 0.01;          // TV weight
  double learning_rate = 1e-3;
  double clamp_min = 1300.0;    // [m/s]
  double clamp_max = 1800.0;    // [m/s]
  double f_number = 1.0;
  // Grid-baseline parameters are scaled: Delta-c = param_scale * u, the same
  // scale the network applies to its output, so one Adam step moves both
  // parameterizations by comparable speeds.
  double param_scale = 100.0;
  Seed seed;
  SirenLayout siren;
  int checkpoint_every = 0;     // epochs; 0 disables
  int bmode_upsample = 4;       // refinement factor of the final B-mode grid
  double bmode_dynamic_range = 50.0;  // [dB]

  void validate() const;
};

struct EstimationResult {
  SoSGrid sos_map;
  std::vector<LossBreakdown> loss_trace;  // one entry per epoch
  BModeImage final_bmode;
  double wall_time_s = 0.0;
};

// Optimization abort carrying diagnostics for the caller to dump.
struct EstimationAbort : NumericError {
  EstimationAbort(const std::string& msg, int epoch_, double grad_norm_, SoSGrid map_)
      : NumericError(msg), epoch(epoch_), grad_norm(grad_norm_), map(std::move(map_)) {}
  int epoch;
  double grad_norm;
  SoSGrid map;
};

// c = clamp(c0 + delta, [lo, hi]) elementwise; clamped cells are flagged in
// *clamped (when given) and pass zero gradient.
SoSGrid compose_sos(std::span<const double> delta, const SoSGrid& c0, double lo, double hi,
                    std::vector<std::uint8_t>* clamped = nullptr);

// Differentiable pipeline bound to one data set: parameters -> Delta-c ->
// compose -> beamform -> loss, with the full reverse-mode chain back to the
// parameters. Parameters are the packed SIREN weights (inr mode) or the
// scaled per-cell values (grid_baseline mode).
class EstimationProblem {
 public:
  EstimationProblem(const AnalyticChannelData& iq, const ArrayGeometry& geom,
                    const SoSGrid& c0, const EstimationConfig& cfg);

  std::size_t parameter_count() const { return n_params_; }
  ParameterVector initial_parameters() const;

  LossBreakdown loss(std::span<const double> params);
  LossBreakdown loss_and_gradient(std::span<const double> params, std::span<double> grad);

  SoSGrid sos_for(std::span<const double> params);
  const SirenNetwork* network() const;

 private:
  std::vector<double> delta_for(std::span<const double> params);

  const AnalyticChannelData* iq_;
  const ArrayGeometry* geom_;
  SoSGrid c0_;
  EstimationConfig cfg_;
  DasOperator das_;
  std::vector<Vec2> coords_;  // normalized grid nodes
  std::optional<SirenNetwork> net_;
  std::size_t n_params_;
};

struct EstimationSnapshot {
  int epoch;
  const SoSGrid& sos;
  const SirenNetwork* net;  // null in grid_baseline mode
};
using CheckpointFn = std::function<void(const EstimationSnapshot&)>;

// Full-batch optimization loop: every epoch evaluates all grid nodes,
// beamforms, computes the loss, backpropagates, and takes one Adam step.
// Returns the final map, the per-epoch loss trace (values before each
// step), and a B-mode rendered with the final map. Throws EstimationAbort
// on non-finite losses or gradients.
EstimationResult run_estimation(const AnalyticChannelData& iq, const ArrayGeometry& geom,
                                const SoSGrid& c0, const EstimationConfig& cfg,
                                const CheckpointFn& on_checkpoint = {});

}  // namespace sosmap
