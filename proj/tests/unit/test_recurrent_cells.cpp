#include <gtest/gtest.h>

#include "cell_instances.hpp"

using namespace huihen;
using cells::values;
using cells::vec_var;
using oracle::Vec;

TEST(TimeAwareGru, MatchesTranscriptionOracle) {
  Rng rng(21);
  for (int i = 0; i < 300; ++i) {
    const auto in = cells::random_time_aware(rng, 1 + rng.below(6), 1 + rng.below(6), 1 + rng.below(4), 1);
    ASSERT_LT(cells::time_aware_step_error(in), 1e-10);
  }
}

TEST(TimeAwareGru, ZeroParamsHalveState) {
  Rng rng(1);
  auto in = cells::random_time_aware(rng, 3, 4, 2, 1);
  for (auto* m : {&in.p.w_u, &in.p.w_r, &in.p.w_p, &in.p.w_m}) std::fill(m->data.begin(), m->data.end(), 0.0);
  for (auto* v : {&in.p.q, &in.p.b_u, &in.p.b_r, &in.p.b_p, &in.p.b_m}) std::fill(v->begin(), v->end(), 0.0);
  Tape<double> t;
  const auto v = cells::bind(t, in.p);
  const auto& s = in.steps[0];
  const auto h1 =
      values(t, time_aware_step(t, v, vec_var(t, s.x), vec_var(t, in.h0), vec_var(t, s.xw), vec_var(t, s.xm), s.dt));
  for (std::size_t i = 0; i < h1.size(); ++i) EXPECT_EQ(h1[i], 0.5 * in.h0[i]);
}

TEST(TimeAwareGru, ZeroIntervalIgnoresQ) {
  Rng rng(2);
  auto a = cells::random_time_aware(rng, 3, 3, 2, 1);
  auto b = a;
  for (auto& q : b.p.q) q = rng.normal(0.0, 5.0);
  a.steps[0].dt = b.steps[0].dt = 0.0;
  Tape<double> t;
  auto run = [&](const cells::TimeAwareInstance& in) {
    t.clear();
    const auto v = cells::bind(t, in.p);
    const auto& s = in.steps[0];
    return values(t, time_aware_step(t, v, vec_var(t, s.x), vec_var(t, in.h0), vec_var(t, s.xw), vec_var(t, s.xm), 0.0));
  };
  EXPECT_EQ(run(a), run(b));
}

TEST(TimeAwareGru, GatesStayInUnitInterval) {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto in = cells::random_time_aware(rng, 4, 3, 2, 1);
    const auto& s = in.steps[0];
    const auto h = oracle::time_aware_step(in.p, s.x, in.h0, s.xw, s.xm, s.dt);
    // |h'| <= (1-u)|h| + u |p T| <= max(|h|, 1)
    for (std::size_t k = 0; k < h.size(); ++k) ASSERT_LE(std::abs(h[k]), std::max(std::abs(in.h0[k]), 1.0) + 1e-12);
  }
}

TEST(EncodeSession, SingleEventIsOneStepFromZero) {
  Rng rng(4);
  const auto in = cells::random_time_aware(rng, 3, 4, 2, 1);
  Tape<double> t;
  const auto v = cells::bind(t, in.p);
  const auto& s = in.steps[0];
  const std::vector<SessionStep> steps{{vec_var(t, s.x), vec_var(t, s.xw), vec_var(t, s.xm), s.dt}};
  const auto got = values(t, encode_session(t, v, std::span<const SessionStep>(steps), 4));
  EXPECT_LT(cells::max_abs_diff(got, oracle::time_aware_step(in.p, s.x, Vec(4, 0.0), s.xw, s.xm, s.dt)), 1e-14);
}

TEST(EncodeSession, EmptySessionIsZero) {
  Rng rng(5);
  const auto in = cells::random_time_aware(rng, 3, 4, 2, 0);
  Tape<double> t;
  const auto v = cells::bind(t, in.p);
  EXPECT_EQ(values(t, encode_session(t, v, std::span<const SessionStep>{}, 4)), Vec(4, 0.0));
}

TEST(EncodeSession, EqualsChainedOracleSteps) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto in = cells::random_time_aware(rng, 3, 5, 2, 1 + rng.below(25));
    Tape<double> t;
    const auto v = cells::bind(t, in.p);
    std::vector<SessionStep> steps;
    Vec h(5, 0.0);
    for (const auto& s : in.steps) {
      steps.push_back({vec_var(t, s.x), vec_var(t, s.xw), vec_var(t, s.xm), s.dt});
      h = oracle::time_aware_step(in.p, s.x, h, s.xw, s.xm, s.dt);
    }
    ASSERT_LT(cells::max_abs_diff(values(t, encode_session(t, v, std::span<const SessionStep>(steps), 5)), h), 1e-10);
  }
}

TEST(UserItemGru, MatchesTranscriptionOracle) {
  Rng rng(22);
  for (int i = 0; i < 300; ++i) {
    const auto g = cells::random_user_item(rng, 1 + rng.below(6), 1 + rng.below(6), 1 + rng.below(5),
                                           1 + rng.below(5), 1);
    ASSERT_LT(cells::user_item_step_error(g), 1e-10);
  }
}

TEST(UserItemGru, ZeroParamsHalveState) {
  Rng rng(7);
  auto g = cells::random_user_item(rng, 3, 3, 2, 2, 1);
  for (auto* m : {&g.p.w_u, &g.p.w_r, &g.p.w_p}) std::fill(m->data.begin(), m->data.end(), 0.0);
  for (auto* v : {&g.p.b_u, &g.p.b_r, &g.p.b_p}) std::fill(v->begin(), v->end(), 0.0);
  Tape<double> t;
  const auto v = cells::bind_gru<UserItemGruVars>(t, g.p);
  const auto h = values(t, user_item_step(t, v, vec_var(t, g.inputs[0]), vec_var(t, g.h0), vec_var(t, g.x_user),
                                          vec_var(t, g.x_item)));
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_EQ(h[i], 0.5 * g.h0[i]);
}

TEST(UserItemGru, ZeroSideInputsReduceToPlainCell) {
  // With x_user = x_item = 0 and their weight columns zeroed, the cell is a
  // GRU over [T; h] whose candidate sees [T; r.h].
  Rng rng(8);
  const std::size_t in = 3, h = 4, u = 2, it = 2;
  auto g = cells::random_user_item(rng, in, h, u, it, 1);
  std::fill(g.x_user.begin(), g.x_user.end(), 0.0);
  std::fill(g.x_item.begin(), g.x_item.end(), 0.0);
  oracle::GruParams plain;
  plain.w_u = {h, in + h, {}};
  plain.w_r = {h, in + h, {}};
  plain.w_p = {h, in + h, {}};
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < in + h; ++j) {
      plain.w_u.data.push_back(g.p.w_u.at(i, j));
      plain.w_r.data.push_back(g.p.w_r.at(i, j));
    }
    for (std::size_t j = 0; j < in; ++j) plain.w_p.data.push_back(g.p.w_p.at(i, j));
    for (std::size_t j = 0; j < h; ++j) plain.w_p.data.push_back(g.p.w_p.at(i, in + u + it + j));
  }
  plain.b_u = g.p.b_u;
  plain.b_r = g.p.b_r;
  plain.b_p = g.p.b_p;
  Tape<double> t;
  const auto v = cells::bind_gru<UserItemGruVars>(t, g.p);
  const auto got = values(t, user_item_step(t, v, vec_var(t, g.inputs[0]), vec_var(t, g.h0), vec_var(t, g.x_user),
                                            vec_var(t, g.x_item)));
  EXPECT_LT(cells::max_abs_diff(got, oracle::standard_step(plain, g.inputs[0], g.h0)), 1e-14);
}

TEST(EncodeHistory, EqualsChainedOracleSteps) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = cells::random_user_item(rng, 4, 4, 3, 2, rng.below(51));
    Tape<double> t;
    const auto v = cells::bind_gru<UserItemGruVars>(t, g.p);
    std::vector<Var> xs;
    Vec h(4, 0.0);
    for (const auto& x : g.inputs) {
      xs.push_back(vec_var(t, x));
      h = oracle::user_item_step(g.p, x, h, g.x_user, g.x_item);
    }
    const auto got =
        values(t, encode_history(t, v, std::span<const Var>(xs), vec_var(t, g.x_user), vec_var(t, g.x_item), 4));
    ASSERT_LT(cells::max_abs_diff(got, h), 1e-10);
  }
}

TEST(StandardGru, MatchesOracleChain) {
  Rng rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = cells::random_standard(rng, 3, 4, rng.below(30));
    Tape<double> t;
    const auto v = cells::bind_gru<StandardGruVars>(t, g.p);
    std::vector<Var> xs;
    Vec h(4, 0.0);
    for (const auto& x : g.inputs) {
      xs.push_back(vec_var(t, x));
      h = oracle::standard_step(g.p, x, h);
    }
    ASSERT_LT(cells::max_abs_diff(values(t, encode_standard(t, v, std::span<const Var>(xs), 4)), h), 1e-10);
  }
}
