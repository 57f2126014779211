#include "sosmap/loss.hpp"

#include <cmath>

namespace sosmap {

double phase_error_loss(const ApertureStack& stack, std::vector<std::complex<double>>* grad) {
  if (grad != nullptr) grad->assign(stack.values.size(), {0.0, 0.0});

  // First pass: weighted residual sums.
  double num = 0.0;
  double den = 0.0;
  for (std::size_t p = 0; p < stack.n_pixels; ++p) {
    for (std::size_t r = 0; r + 1 < stack.n_rx; ++r) {
      if (!stack.is_valid(p, r) || !stack.is_valid(p, r + 1)) continue;
      const std::complex<double> z = stack.at(p, r + 1) * std::conj(stack.at(p, r));
      const double w = std::abs(z);
      if (w == 0.0) continue;
      const double phi = std::arg(z);
      num += w * phi * phi;
      den += w;
    }
  }
  if (den == 0.0) return 0.0;
  const double loss = num / den;
  if (grad == nullptr) return loss;

  // Second pass: dL/d(stack) packed as dL/dRe + i dL/dIm. With z = a conj(b),
  // dL/dz_packed = z * ((phi^2 - L) + 2 i phi) / (|z| D), then
  // dL/da = g * b and dL/db = conj(g) * a.
  for (std::size_t p = 0; p < stack.n_pixels; ++p) {
    for (std::size_t r = 0; r + 1 < stack.n_rx; ++r) {
      if (!stack.is_valid(p, r) || !stack.is_valid(p, r + 1)) continue;
      const std::complex<double> b = stack.at(p, r);
      const std::complex<double> a = stack.at(p, r + 1);
      const std::complex<double> z = a * std::conj(b);
      const double w = std::abs(z);
      if (w == 0.0) continue;
      const double phi = std::arg(z);
      const std::complex<double> g =
          z * std::complex<double>(phi * phi - loss, 2.0 * phi) / (w * den);
      (*grad)[p * stack.n_rx + r + 1] += g * b;
      (*grad)[p * stack.n_rx + r] += std::conj(g) * a;
    }
  }
  return loss;
}

double tv_loss(const SoSGrid& sos, std::vector<double>* grad) {
  const std::size_t nl = sos.grid().n_lateral();
  const std::size_t nd = sos.grid().n_depth();
  if (grad != nullptr) grad->assign(sos.values().size(), 0.0);
  const std::size_t n_pairs = (nd - 1) * nl + nd * (nl - 1);
  double sum = 0.0;
  const auto& v = sos.values();
  auto accumulate = [&](std::size_t lo_idx, std::size_t hi_idx) {
    const double diff = v[hi_idx] - v[lo_idx];
    sum += std::abs(diff);
    if (grad != nullptr && diff != 0.0) {
      // Subgradient 0 at exact ties.
      const double s = diff > 0.0 ? 1.0 : -1.0;
      (*grad)[hi_idx] += s;
      (*grad)[lo_idx] -= s;
    }
  };
  for (std::size_t j = 0; j + 1 < nd; ++j) {
    for (std::size_t i = 0; i < nl; ++i) accumulate(j * nl + i, (j + 1) * nl + i);
  }
  for (std::size_t j = 0; j < nd; ++j) {
    for (std::size_t i = 0; i + 1 < nl; ++i) accumulate(j * nl + i, j * nl + i + 1);
  }
  const double inv_pairs = 1.0 / static_cast<double>(n_pairs);
  if (grad != nullptr) {
    for (double& g : *grad) g *= inv_pairs;
  }
  return sum * inv_pairs;
}

LossBreakdown total_loss(const ApertureStack& stack, const SoSGrid& sos, double alpha,
                         std::vector<std::complex<double>>* stack_grad,
                         std::vector<double>* sos_grad) {
  LossBreakdown out;
  out.alpha = alpha;
  out.pe = phase_error_loss(stack, stack_grad);
  out.tv = tv_loss(sos, sos_grad);
  if (sos_grad != nullptr) {
    for (double& g : *sos_grad) g *= alpha;
  }
  out.total = out.pe + alpha * out.tv;
  return out;
}

}  // namespace sosmap
