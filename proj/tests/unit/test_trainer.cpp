#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "huihen/adam.hpp"
#include "huihen/teacher.hpp"
#include "huihen/trainer.hpp"

using namespace huihen;

TEST(Adam, ConstantGradientMatchesHandRecurrence) {
  const AdamConfig cfg{0.01, 0.9, 0.999, 1e-8};
  std::vector<double> p{1.5}, m{0.0}, v{0.0};
  const std::vector<double> g{0.3};
  double theta = 1.5, mm = 0.0, vv = 0.0;
  for (std::uint64_t t = 1; t <= 50; ++t) {
    adam_step<double>(p, g, m, v, t, cfg);
    mm = 0.9 * mm + 0.1 * 0.3;
    vv = 0.999 * vv + 0.001 * 0.09;
    const double mh = mm / (1.0 - std::pow(0.9, static_cast<double>(t)));
    const double vh = vv / (1.0 - std::pow(0.999, static_cast<double>(t)));
    theta -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    ASSERT_NEAR(p[0], theta, 1e-14) << "step " << t;
  }
}

TEST(Adam, ZeroGradientLeavesParamsAndDecaysMoments) {
  const AdamConfig cfg;
  std::vector<double> p{2.0}, m{0.5}, v{0.25};
  const std::vector<double> g{0.0};
  adam_step<double>(p, g, m, v, 3, cfg);
  EXPECT_DOUBLE_EQ(m[0], 0.45);
  EXPECT_DOUBLE_EQ(v[0], 0.24975);
  // m is nonzero so the parameter still moves; with zero moments it would not.
  std::vector<double> q{2.0}, m0{0.0}, v0{0.0};
  adam_step<double>(q, g, m0, v0, 1, cfg);
  EXPECT_EQ(q[0], 2.0);
}

TEST(Adam, ZeroLearningRateIsIdentity) {
  AdamConfig cfg;
  cfg.learning_rate = 0.0;
  std::vector<double> p{1.0, -2.0}, m(2, 0.0), v(2, 0.0);
  const std::vector<double> g{5.0, -3.0};
  adam_step<double>(p, g, m, v, 1, cfg);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0}));
}

TEST(Adam, SizeMismatchThrows) {
  std::vector<double> p(2), m(2), v(2);
  const std::vector<double> g(3);
  EXPECT_THROW(adam_step<double>(p, g, m, v, 1, AdamConfig{}), ShapeError);
}

TEST(Teacher, TwoPointFitMatchesClosedForm) {
  // z = -1 (y=0), +1 (y=1): b = 0 by symmetry and w solves sigmoid(-w) = l2 w.
  TeacherConfig cfg;
  cfg.l2 = 0.05;
  cfg.tolerance = 1e-12;
  cfg.max_iters = 1000000;
  const std::vector<std::vector<double>> x{{0.0}, {2.0}};
  const std::vector<int> y{0, 1};
  const auto m = fit_logistic(x, y, cfg);
  double lo = 0.0, hi = 100.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (1.0 / (1.0 + std::exp(mid)) > cfg.l2 * mid ? lo : hi) = mid;
  }
  // The fitted model sees z = +-1/sqrt(1 + eps).
  const double scale = 1.0 / std::sqrt(1.0 + cfg.norm_epsilon);
  EXPECT_NEAR(m.weights[0] * scale, lo, 1e-6 * std::max(1.0, lo));
  EXPECT_NEAR(m.intercept, 0.0, 1e-9);
}

TEST(Teacher, SeparableDataGivesConfidentProbabilities) {
  std::vector<ProfileRecord> recs;
  for (int i = 0; i < 40; ++i) {
    ProfileRecord r;
    r.user_id = "u" + std::to_string(i);
    const bool pos = i % 2 == 0;
    r.features = {pos ? 3.0 + 0.01 * i : -3.0 - 0.01 * i, 0.5};
    r.label = pos ? 1 : 0;
    recs.push_back(r);
  }
  TeacherConfig cfg;
  cfg.l2 = 1e-4;
  for (const auto& t : builtin_teacher(recs, cfg)) {
    const int i = std::stoi(t.user_id.substr(1));
    if (i % 2 == 0)
      EXPECT_GT(t.probability, 0.95);
    else
      EXPECT_LT(t.probability, 0.05);
  }
}

TEST(Teacher, CoinFlipWithConstantFeaturesGivesHalf) {
  std::vector<ProfileRecord> recs;
  for (int i = 0; i < 10; ++i) {
    ProfileRecord r;
    r.user_id = "u" + std::to_string(i);
    r.features = {1.0, 1.0};
    r.label = i % 2;
    recs.push_back(r);
  }
  for (const auto& t : builtin_teacher(recs, TeacherConfig{})) EXPECT_NEAR(t.probability, 0.5, 1e-9);
}

TEST(Teacher, CsvRoundTripAndValidation) {
  std::ostringstream out;
  const std::vector<TeacherRow> rows{{"a", 0.25}, {"b", 0.875}};
  write_teacher(out, rows);
  std::istringstream in(out.str());
  const auto m = read_teacher(in);
  EXPECT_EQ(m.at("a"), 0.25);
  EXPECT_EQ(m.at("b"), 0.875);
  std::istringstream bad("user_id,probability\na,1.0\n");
  EXPECT_THROW(read_teacher(bad), ParseError);
}

TEST(Split, StratifiedAndDisjoint) {
  std::vector<int> labels;
  for (int i = 0; i < 1000; ++i) labels.push_back(i % 10 == 0 ? 1 : 0);
  const auto s = stratified_split(labels, 0.2, 42);
  EXPECT_EQ(s.train.size() + s.val.size(), labels.size());
  std::size_t val_pos = 0;
  for (auto i : s.val) val_pos += labels[i];
  EXPECT_EQ(s.val.size(), 200u);
  EXPECT_EQ(val_pos, 20u);
  std::vector<bool> seen(labels.size(), false);
  for (auto i : s.train) seen[i] = true;
  for (auto i : s.val) {
    EXPECT_FALSE(seen[i]);
    seen[i] = true;
  }
  const auto again = stratified_split(labels, 0.2, 42);
  EXPECT_EQ(again.val, s.val);
  EXPECT_NE(stratified_split(labels, 0.2, 43).val, s.val);
}

TEST(MetricsCsv, HeaderAndRows) {
  std::ostringstream out;
  const std::vector<EpochMetrics> rows{{1, "train", 0.5, 0.6, 0.2}};
  write_metrics_csv(out, rows);
  EXPECT_EQ(out.str().substr(0, 23), "epoch,split,loss,auc,ks");
  EXPECT_NE(out.str().find("1,train,0.5,0.6"), std::string::npos);
}
