// Central finite-difference verification of tape gradients.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "huihen/tape.hpp"

namespace huihen {

struct ParamArray {
  std::string name;
  Shape shape;
  std::vector<double> data;
};

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Relative error is |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
  // Points whose relu/prelu/clamp inputs lie this close to a kink are
  // reported as skipped rather than checked.
  double kink_guard = 1e-3;
};

struct GradCheckReport {
  bool passed = true;
  bool skipped = false;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::vector<std::pair<std::string, double>> per_param;
};

inline double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

// `f(tape, vars)` must build a scalar loss from the parameter Vars and be
// deterministic (dropout disabled).
template <class F>
GradCheckReport grad_check(F&& f, std::vector<ParamArray>& theta,
                           const GradCheckOptions& opts = {}) {
  GradCheckReport report;
  Tape<double> tape;
  std::vector<Var> vars;

  auto evaluate = [&](bool with_grad) {
    tape.clear();
    vars.clear();
    for (auto& p : theta) vars.push_back(tape.parameter(p.data, p.shape, with_grad));
    Var loss = f(tape, std::as_const(vars));
    if (with_grad) tape.backward(loss);
    return std::pair{loss, tape.scalar(loss)};
  };

  auto [loss, base] = evaluate(true);
  (void)base;
  if (tape.kink_margin() < opts.kink_guard) {
    report.skipped = true;
    return report;
  }
  std::vector<std::vector<double>> analytic;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    auto g = tape.grad(vars[k]);
    analytic.emplace_back(g.begin(), g.end());
  }

  for (std::size_t k = 0; k < theta.size(); ++k) {
    double worst = 0.0;
    auto& data = theta[k].data;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + opts.step;
      const double up = evaluate(false).second;
      data[i] = saved - opts.step;
      const double down = evaluate(false).second;
      data[i] = saved;
      const double numeric = (up - down) / (2.0 * opts.step);
      worst = std::max(worst, relative_error(analytic[k][i], numeric, opts.floor));
      ++report.checked;
    }
    report.per_param.emplace_back(theta[k].name, worst);
    report.max_rel_error = std::max(report.max_rel_error, worst);
  }
  report.passed = report.max_rel_error < opts.tolerance;
  return report;
}

}  // namespace huihen
