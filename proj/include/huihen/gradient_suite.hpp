// Randomized finite-difference checks for each differentiable component:
// field-aware transform, both recurrent cells, the fusion head, and both
// losses. Instances landing near a relu/prelu/clamp kink are redrawn.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "huihen/embed_field.hpp"
#include "huihen/grad_check.hpp"
#include "huihen/recurrent_cells.hpp"
#include "huihen/rng.hpp"
#include "huihen/upi_head.hpp"

namespace huihen {

struct ComponentGradReport {
  std::string component;
  std::size_t instances = 0;
  std::size_t redrawn = 0;
  double max_rel_error = 0.0;
  bool passed = true;
};

namespace detail {

inline ParamArray random_array(Rng& rng, const std::string& name, Shape shape, double scale) {
  ParamArray p{name, shape, std::vector<double>(shape.size())};
  for (auto& v : p.data) v = rng.normal(0.0, scale);
  return p;
}

template <class Build, class Loss>
ComponentGradReport check_component(const std::string& name, std::size_t instances, std::uint64_t seed,
                                    const GradCheckOptions& opts, Build&& build, Loss&& loss) {
  ComponentGradReport r;
  r.component = name;
  Rng rng(derive_seed(seed, name));
  while (r.instances < instances) {
    std::vector<ParamArray> theta;
    auto ctx = build(rng, theta);
    auto rep = grad_check([&](Tape<double>& t, const std::vector<Var>& v) { return loss(t, v, ctx); }, theta, opts);
    if (rep.skipped) {
      ++r.redrawn;
      if (r.redrawn > 100 * instances) break;
      continue;
    }
    ++r.instances;
    r.max_rel_error = std::max(r.max_rel_error, rep.max_rel_error);
  }
  r.passed = r.instances >= instances && r.max_rel_error < opts.tolerance;
  return r;
}

}  // namespace detail

inline std::vector<ComponentGradReport> run_gradient_suite(std::size_t instances, const GradCheckOptions& opts,
                                                           std::uint64_t seed = 1) {
  using detail::random_array;
  std::vector<ComponentGradReport> out;
  const std::size_t d = 4, h = 3, t = 2, p = 3;

  out.push_back(detail::check_component(
      "field_aware", instances, seed, opts,
      [&](Rng& rng, std::vector<ParamArray>& th) {
        th.push_back(random_array(rng, "w", Shape::mat(d, d), 0.8));
        th.push_back(random_array(rng, "b", Shape::vec(d), 0.5));
        th.push_back(random_array(rng, "e", Shape::vec(d), 1.0));
        std::vector<double> c(d);
        for (auto& v : c) v = rng.normal();
        return c;
      },
      [&](Tape<double>& tp, const std::vector<Var>& v, const std::vector<double>& c) {
        Var f = field_aware(tp, v[2], FieldTransform{v[0], v[1]});
        return tp.sum(tp.mul(f, tp.constant(c)));
      }));

  out.push_back(detail::check_component(
      "time_aware_gru", instances, seed, opts,
      [&](Rng& rng, std::vector<ParamArray>& th) {
        const TimeAwareGruDims dims{d, h, t};
        th.push_back(random_array(rng, "w_u", Shape::mat(h, dims.gate_cols()), 0.5));
        th.push_back(random_array(rng, "w_r", Shape::mat(h, dims.gate_cols()), 0.5));
        th.push_back(random_array(rng, "w_p", Shape::mat(h, dims.candidate_cols()), 0.5));
        th.push_back(random_array(rng, "w_m", Shape::mat(h, d), 0.5));
        th.push_back(random_array(rng, "q", Shape::vec(d), 0.05));
        for (const char* b : {"b_u", "b_r", "b_p", "b_m"}) th.push_back(random_array(rng, b, Shape::vec(h), 0.3));
        for (int k = 0; k < 2; ++k) {
          th.push_back(random_array(rng, "x" + std::to_string(k), Shape::vec(d), 1.0));
          th.push_back(random_array(rng, "xw" + std::to_string(k), Shape::vec(t), 1.0));
          th.push_back(random_array(rng, "xm" + std::to_string(k), Shape::vec(t), 1.0));
        }
        th.push_back(random_array(rng, "h0", Shape::vec(h), 0.5));
        return std::vector<double>{rng.uniform(0.0, 60.0), rng.uniform(0.0, 60.0)};
      },
      [&](Tape<double>& tp, const std::vector<Var>& v, const std::vector<double>& dts) {
        const TimeAwareGruVars g{v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]};
        Var hs = v[15];
        for (int k = 0; k < 2; ++k)
          hs = time_aware_step(tp, g, v[9 + 3 * k], hs, v[10 + 3 * k], v[11 + 3 * k], dts[k]);
        return tp.sum(hs);
      }));

  out.push_back(detail::check_component(
      "user_item_gru", instances, seed, opts,
      [&](Rng& rng, std::vector<ParamArray>& th) {
        const UserItemGruDims dims{h, h, p, d};
        th.push_back(random_array(rng, "w_u", Shape::mat(h, dims.gate_cols()), 0.5));
        th.push_back(random_array(rng, "w_r", Shape::mat(h, dims.gate_cols()), 0.5));
        th.push_back(random_array(rng, "w_p", Shape::mat(h, dims.candidate_cols()), 0.5));
        for (const char* b : {"b_u", "b_r", "b_p"}) th.push_back(random_array(rng, b, Shape::vec(h), 0.3));
        th.push_back(random_array(rng, "t0", Shape::vec(h), 1.0));
        th.push_back(random_array(rng, "t1", Shape::vec(h), 1.0));
        th.push_back(random_array(rng, "x_user", Shape::vec(p), 1.0));
        th.push_back(random_array(rng, "x_item", Shape::vec(d), 1.0));
        th.push_back(random_array(rng, "h0", Shape::vec(h), 0.5));
        return 0;
      },
      [&](Tape<double>& tp, const std::vector<Var>& v, int) {
        const UserItemGruVars g{v[0], v[1], v[2], v[3], v[4], v[5]};
        Var hs = user_item_step(tp, g, v[6], v[10], v[8], v[9]);
        hs = user_item_step(tp, g, v[7], hs, v[8], v[9]);
        return tp.sum(hs);
      }));

  out.push_back(detail::check_component(
      "upi_head", instances, seed, opts,
      [&](Rng& rng, std::vector<ParamArray>& th) {
        const std::size_t in = 2 * h + p, w0 = 5, w1 = 4;
        th.push_back(random_array(rng, "w0", Shape::mat(w0, in), 0.5));
        th.push_back(random_array(rng, "b0", Shape::vec(w0), 0.3));
        th.push_back(random_array(rng, "w1", Shape::mat(w1, w0), 0.5));
        th.push_back(random_array(rng, "b1", Shape::vec(w1), 0.3));
        th.push_back(random_array(rng, "w2", Shape::mat(2, w1), 0.5));
        th.push_back(random_array(rng, "b2", Shape::vec(2), 0.3));
        th.push_back({"alpha0", Shape::scalar(), {rng.uniform(0.1, 0.9)}});
        th.push_back({"alpha1", Shape::scalar(), {rng.uniform(0.1, 0.9)}});
        th.push_back(random_array(rng, "t_m", Shape::vec(h), 1.0));
        th.push_back(random_array(rng, "h_m", Shape::vec(h), 1.0));
        th.push_back(random_array(rng, "profile_f", Shape::vec(p), 1.0));
        th.push_back({"alpha_raw", Shape::scalar(), {rng.normal()}});
        return std::pair<double, double>{rng.bernoulli(0.5) ? 1.0 : 0.0, rng.uniform(0.05, 0.95)};
      },
      [&](Tape<double>& tp, const std::vector<Var>& v, std::pair<double, double> yq) {
        UpiVars u{{v[0], v[2], v[4]}, {v[1], v[3], v[5]}, {v[6], v[7]}};
        const UpiOutput o = fuse_and_score(tp, u, v[8], v[9], v[10], nullptr, 1e-7);
        return aux_loss(tp, o.prob, yq.second, yq.first, v[11], 1e-7);
      }));

  out.push_back(detail::check_component(
      "cross_entropy", instances, seed, opts,
      [&](Rng& rng, std::vector<ParamArray>& th) {
        th.push_back({"p", Shape::scalar(), {rng.uniform(0.02, 0.98)}});
        return rng.bernoulli(0.5) ? 1.0 : 0.0;
      },
      [&](Tape<double>& tp, const std::vector<Var>& v, double y) { return cross_entropy(tp, v[0], y); }));

  out.push_back(detail::check_component(
      "aux_loss", instances, seed, opts,
      [&](Rng& rng, std::vector<ParamArray>& th) {
        th.push_back({"p", Shape::scalar(), {rng.uniform(0.02, 0.98)}});
        th.push_back({"alpha_raw", Shape::scalar(), {rng.normal()}});
        return std::pair<double, double>{rng.bernoulli(0.5) ? 1.0 : 0.0, rng.uniform(0.02, 0.98)};
      },
      [&](Tape<double>& tp, const std::vector<Var>& v, std::pair<double, double> yq) {
        return aux_loss(tp, v[0], yq.second, yq.first, v[1], 1e-7);
      }));
  return out;
}

}  // namespace huihen
