#pragma once

#include <cmath>
#include <cstdint>
#include <span>

#include "huihen/common.hpp"

namespace huihen {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected Adam update; `step` is the 1-based update count.
template <class Real>
void adam_step(std::span<Real> params, std::span<const Real> grads, std::span<Real> m,
               std::span<Real> v, std::uint64_t step, const AdamConfig& cfg) {
  if (params.size() != grads.size() || params.size() != m.size() || params.size() != v.size())
    throw ShapeError("adam_step: parameter/gradient/moment sizes differ");
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  const auto b1 = static_cast<Real>(cfg.beta1);
  const auto b2 = static_cast<Real>(cfg.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Real g = grads[i];
    m[i] = b1 * m[i] + (Real(1) - b1) * g;
    v[i] = b2 * v[i] + (Real(1) - b2) * g * g;
    const double m_hat = static_cast<double>(m[i]) / c1;
    const double v_hat = static_cast<double>(v[i]) / c2;
    params[i] -= static_cast<Real>(cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
  }
}

}  // namespace huihen
