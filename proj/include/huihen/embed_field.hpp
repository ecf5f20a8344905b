// Behavior / time-period embedding, profile normalization, and the per-field
// transform relu(W_field * e + b_field).
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "huihen/common.hpp"
#include "huihen/tape.hpp"

namespace huihen {

enum class AmountTransform { kLog, kLog1p };

inline double amount_scale(double amount, AmountTransform t) {
  if (!(amount > 0.0)) throw Error("transform operation amount must be positive");
  return t == AmountTransform::kLog ? std::log(amount) : std::log1p(amount);
}

// One event resolved against the embedding tables. `kind` mirrors Category
// plus a pad marker.
struct EncodedEvent {
  enum class Kind : std::uint8_t { kItemClick, kTransformOp, kFunctionWidget, kPad };
  Kind kind = Kind::kPad;
  std::uint16_t field = 0;  // field-transform index
  std::uint16_t table = 0;  // item table (product class) for item clicks
  std::uint32_t row = 0;
  double scale = 1.0;       // ln(amount) for transform ops
  std::uint8_t week = 0;    // 0..6
  std::uint8_t month = 0;   // 0..30
  double dt = 0.0;          // seconds since the previous event in the session
};

struct NormalizationStats {
  std::vector<double> mean;
  std::vector<double> var;  // population variance
  double epsilon = 1e-8;

  // Computed over the rows given (the training split).
  static NormalizationStats fit(std::span<const std::vector<double>> rows, double epsilon) {
    NormalizationStats s;
    s.epsilon = epsilon;
    if (rows.empty()) return s;
    const std::size_t p = rows.front().size();
    s.mean.assign(p, 0.0);
    s.var.assign(p, 0.0);
    for (const auto& r : rows)
      for (std::size_t j = 0; j < p; ++j) s.mean[j] += r[j];
    for (auto& m : s.mean) m /= static_cast<double>(rows.size());
    for (const auto& r : rows)
      for (std::size_t j = 0; j < p; ++j) {
        const double d = r[j] - s.mean[j];
        s.var[j] += d * d;
      }
    for (auto& v : s.var) v /= static_cast<double>(rows.size());
    return s;
  }

  // z = (x - mean) / sqrt(var + eps); eps keeps constant features finite.
  std::vector<double> apply(std::span<const double> x) const {
    if (x.size() != mean.size())
      throw ShapeError("normalize: expected " + std::to_string(mean.size()) + " features, got " +
                       std::to_string(x.size()));
    std::vector<double> z(x.size());
    for (std::size_t j = 0; j < x.size(); ++j)
      z[j] = (x[j] - mean[j]) / std::sqrt(var[j] + epsilon);
    return z;
  }
};

struct EmbeddingVars {
  std::vector<Var> item_tables;  // one per product class
  Var op_table;
  Var widget_table;
  Var week_table;
  Var month_table;
  std::size_t dim = 0;
};

struct FieldTransform {
  Var w;
  Var b;  // invalid when bias is disabled
};

template <class Real>
Var embed_event(Tape<Real>& tape, const EmbeddingVars& emb, const EncodedEvent& ev) {
  switch (ev.kind) {
    case EncodedEvent::Kind::kItemClick:
      return tape.row(emb.item_tables.at(ev.table), ev.row);
    case EncodedEvent::Kind::kTransformOp:
      return tape.scale(tape.row(emb.op_table, ev.row), static_cast<Real>(ev.scale));
    case EncodedEvent::Kind::kFunctionWidget:
      return tape.row(emb.widget_table, ev.row);
    case EncodedEvent::Kind::kPad:
      break;
  }
  return tape.zeros(Shape::vec(emb.dim));
}

template <class Real>
Var field_aware(Tape<Real>& tape, Var e, const FieldTransform& f) {
  Var z = tape.matmul(f.w, e);
  if (f.b.valid()) z = tape.add(z, f.b);
  return tape.relu(z);
}

}  // namespace huihen
