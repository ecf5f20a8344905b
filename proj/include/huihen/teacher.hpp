// Guidance probabilities for teacher-guided pretraining.
//
// Any external model can supply them through a `user_id,probability` CSV. The
// built-in teacher is an L2-regularized logistic regression on normalized
// profile features, fit by full-batch gradient descent.
#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "huihen/embed_field.hpp"
#include "huihen/event_model.hpp"
#include "huihen/tape.hpp"

namespace huihen {

struct TeacherConfig {
  double l2 = 1e-2;
  std::size_t max_iters = 10000;
  double tolerance = 1e-6;
  double norm_epsilon = 1e-8;
};

struct LogisticModel {
  NormalizationStats norm;
  std::vector<double> weights;
  double intercept = 0.0;
  std::size_t iterations = 0;
  double grad_norm = 0.0;

  double predict(std::span<const double> x) const {
    const auto z = norm.apply(x);
    double s = intercept;
    for (std::size_t j = 0; j < z.size(); ++j) s += weights[j] * z[j];
    return Tape<double>::sigmoid_value(s);
  }
};

// Minimizes mean log-loss + l2/2 * |w|^2 (intercept unpenalized).
inline LogisticModel fit_logistic(std::span<const std::vector<double>> x, std::span<const int> y,
                                  const TeacherConfig& cfg) {
  if (x.size() != y.size() || x.empty()) throw Error("teacher: empty or mismatched data");
  std::size_t pos = 0;
  for (int v : y) pos += v == 1;
  if (pos == 0 || pos == y.size()) throw Error("teacher: labels are single-class");

  LogisticModel model;
  model.norm = NormalizationStats::fit(x, cfg.norm_epsilon);
  std::vector<std::vector<double>> z;
  z.reserve(x.size());
  for (const auto& row : x) z.push_back(model.norm.apply(row));
  const std::size_t p = model.norm.mean.size();
  model.weights.assign(p, 0.0);

  // Normalized columns have mean square <= 1, so the Hessian's largest
  // eigenvalue is bounded by (p + 1) / 4 + l2.
  const double step = 1.0 / (0.25 * static_cast<double>(p + 1) + cfg.l2);
  const double n = static_cast<double>(x.size());
  std::vector<double> gw(p);
  for (model.iterations = 0; model.iterations < cfg.max_iters; ++model.iterations) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      double s = model.intercept;
      for (std::size_t j = 0; j < p; ++j) s += model.weights[j] * z[i][j];
      const double r = Tape<double>::sigmoid_value(s) - y[i];
      gb += r;
      for (std::size_t j = 0; j < p; ++j) gw[j] += r * z[i][j];
    }
    gb /= n;
    double norm2 = gb * gb;
    for (std::size_t j = 0; j < p; ++j) {
      gw[j] = gw[j] / n + cfg.l2 * model.weights[j];
      norm2 += gw[j] * gw[j];
    }
    model.grad_norm = std::sqrt(norm2);
    if (model.grad_norm < cfg.tolerance) break;
    model.intercept -= step * gb;
    for (std::size_t j = 0; j < p; ++j) model.weights[j] -= step * gw[j];
  }
  return model;
}

struct TeacherRow {
  std::string user_id;
  double probability = 0.5;
};

inline std::vector<TeacherRow> builtin_teacher(std::span<const ProfileRecord> data,
                                               const TeacherConfig& cfg) {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (const auto& r : data) {
    if (!r.label) continue;
    x.push_back(r.features);
    y.push_back(*r.label);
  }
  const auto model = fit_logistic(x, y, cfg);
  std::vector<TeacherRow> rows;
  rows.reserve(data.size());
  // Guidance files require probabilities strictly inside (0, 1).
  for (const auto& r : data)
    rows.push_back({r.user_id, std::clamp(model.predict(r.features), 1e-12, 1.0 - 1e-12)});
  return rows;
}

inline void write_teacher(std::ostream& out, std::span<const TeacherRow> rows) {
  out << "user_id,probability\n";
  for (const auto& r : rows) out << r.user_id << ',' << format_double(r.probability) << '\n';
}

inline std::map<std::string, double> read_teacher(std::istream& in) {
  std::map<std::string, double> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const auto text = trim(line);
    if (text.empty()) continue;
    const auto cols = split(text, ',');
    if (row == 1 && cols.size() == 2 && trim(cols[0]) == "user_id") continue;
    double q = 0.0;
    if (cols.size() != 2 || !parse_double(trim(cols[1]), q) || !(q > 0.0 && q < 1.0))
      throw ParseError("teacher row " + std::to_string(row) +
                       ": expected user_id,probability with probability in (0,1)");
    out[std::string(trim(cols[0]))] = q;
  }
  return out;
}

inline std::map<std::string, double> read_teacher_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open teacher file '" + path + "'");
  return read_teacher(in);
}

}  // namespace huihen
