#pragma once

#include <complex>
#include <vector>

#include "sosmap/beamform.hpp"
#include "sosmap/geometry.hpp"

namespace sosmap {

struct LossBreakdown {
  double pe = 0.0;     // phase-shift error [rad^2], weight-normalized
  double tv = 0.0;     // mean absolute neighbor difference [m/s]
  double alpha = 0.0;  // regularization weight
  double total = 0.0;  // pe + alpha * tv
};

// Magnitude-weighted squared phase residuals between adjacent valid receive
// channels, normalized by the total weight:
//   phi = arg(s[p,r+1] * conj(s[p,r])), w = |s[p,r+1]| |s[p,r]|
//   L_pe = sum w phi^2 / sum w   (0 when the weight total is 0)
// Invariant to multiplying the whole stack by a nonzero complex constant.
// When grad is non-null it receives dL/dRe + i dL/dIm per stack entry.
double phase_error_loss(const ApertureStack& stack,
                        std::vector<std::complex<double>>* grad = nullptr);

// Anisotropic L1 total variation over both neighbor directions, divided by
// the number of neighbor pairs; subgradient 0 at exactly equal neighbors.
double tv_loss(const SoSGrid& sos, std::vector<double>* grad = nullptr);

// total = pe + alpha * tv. Optional adjoints: stack_grad from the phase
// term, sos_grad the alpha-weighted TV term (the phase term reaches the map
// through the beamformer adjoint, chained by the caller).
LossBreakdown total_loss(const ApertureStack& stack, const SoSGrid& sos, double alpha,
                         std::vector<std::complex<double>>* stack_grad = nullptr,
                         std::vector<double>* sos_grad = nullptr);

}  // namespace sosmap
