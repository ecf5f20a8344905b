// Fusion MLP and losses.
//
// x = [T_m; H_m; profile_f] -> (dense -> prelu -> dropout)* -> dense(2)
// logit = unit1 - unit0, P = clamp(sigmoid(logit), eps, 1 - eps).
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "huihen/rng.hpp"
#include "huihen/tape.hpp"

namespace huihen {

inline double prelu(double x, double alpha) { return std::max(0.0, x) + alpha * std::min(0.0, x); }

inline double clamp_probability(double p, double eps) { return std::clamp(p, eps, 1.0 - eps); }

inline double cross_entropy(double p, int y, double eps = 1e-7) {
  p = clamp_probability(p, eps);
  return -(y * std::log(p) + (1 - y) * std::log(1.0 - p));
}

inline double bernoulli_kl(double p, double q) {
  return p * std::log(p / q) + (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
}

// CE(p, y) + alpha/2 * (KL(p||q) + KL(q||p)), both Bernoulli.
inline double aux_loss(double p, double q, int y, double alpha, double eps = 1e-7) {
  p = clamp_probability(p, eps);
  q = clamp_probability(q, eps);
  return cross_entropy(p, y, eps) + 0.5 * alpha * (bernoulli_kl(p, q) + bernoulli_kl(q, p));
}

inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
inline double inverse_softplus(double y) { return y + std::log(-std::expm1(-y)); }

struct UpiVars {
  std::vector<Var> w;
  std::vector<Var> b;
  std::vector<Var> alpha;  // one per hidden layer
};

struct DropoutSpec {
  double keep = 0.6;
  Rng* rng = nullptr;
};

struct UpiOutput {
  Var logit;
  Var prob;
};

template <class Real>
UpiOutput fuse_and_score(Tape<Real>& tape, const UpiVars& v, Var t_m, Var h_m, Var profile_f,
                         const DropoutSpec* dropout, double clamp_eps) {
  Var x = tape.concat({t_m, h_m, profile_f});
  const std::size_t hidden_layers = v.alpha.size();
  std::vector<Real> mask;
  for (std::size_t l = 0; l < hidden_layers; ++l) {
    x = tape.prelu(tape.add(tape.matmul(v.w[l], x), v.b[l]), v.alpha[l]);
    if (dropout && dropout->rng && dropout->keep < 1.0) {
      const std::size_t n = tape.shape(x).size();
      mask.assign(n, Real(0));
      const Real inv = static_cast<Real>(1.0 / dropout->keep);
      for (auto& m : mask) m = dropout->rng->bernoulli(dropout->keep) ? inv : Real(0);
      x = tape.mul(x, tape.constant(mask));
    }
  }
  Var out = tape.add(tape.matmul(v.w[hidden_layers], x), v.b[hidden_layers]);
  Var logit = tape.sub(tape.slice(out, 1, 1), tape.slice(out, 0, 1));
  Var prob = tape.clamp(tape.sigmoid(logit), static_cast<Real>(clamp_eps),
                        static_cast<Real>(1.0 - clamp_eps));
  return {logit, prob};
}

template <class Real>
Var cross_entropy(Tape<Real>& tape, Var p, double y) {
  Var one = tape.scalar_constant(Real(1));
  Var lp = tape.log(p);
  Var l1p = tape.log(tape.sub(one, p));
  return tape.add(tape.scale(lp, static_cast<Real>(-y)), tape.scale(l1p, static_cast<Real>(-(1.0 - y))));
}

// `q` is a constant teacher probability; `alpha_raw` is the softplus
// pre-image of the trainable weight.
template <class Real>
Var aux_loss(Tape<Real>& tape, Var p, double q, double y, Var alpha_raw, double clamp_eps) {
  q = std::clamp(q, clamp_eps, 1.0 - clamp_eps);
  Var one = tape.scalar_constant(Real(1));
  Var q1 = tape.scalar_constant(static_cast<Real>(q));
  Var log_q = tape.scalar_constant(static_cast<Real>(std::log(q)));
  Var log_1q = tape.scalar_constant(static_cast<Real>(std::log1p(-q)));
  Var p0 = tape.sub(one, p);
  Var lp = tape.log(p);
  Var l1p = tape.log(p0);
  // KL(p||q) = p (ln p - ln q) + (1-p)(ln(1-p) - ln(1-q))
  Var kl_pq = tape.add(tape.mul(p, tape.sub(lp, log_q)), tape.mul(p0, tape.sub(l1p, log_1q)));
  // KL(q||p) = q (ln q - ln p) + (1-q)(ln(1-q) - ln(1-p))
  Var kl_qp = tape.add(tape.mul(q1, tape.sub(log_q, lp)),
                       tape.scale(tape.sub(log_1q, l1p), static_cast<Real>(1.0 - q)));
  Var half_alpha = tape.scale(tape.softplus(alpha_raw), Real(0.5));
  Var ce = cross_entropy(tape, p, y);
  return tape.add(ce, tape.mul(half_alpha, tape.add(kl_pq, kl_qp)));
}

}  // namespace huihen
