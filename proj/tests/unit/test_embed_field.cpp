#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "huihen/embed_field.hpp"
#include "huihen/rng.hpp"

using namespace huihen;

namespace {

struct Tables {
  std::vector<double> item, op, widget;
  std::size_t dim = 4;
  EmbeddingVars bind(Tape<double>& t) const {
    EmbeddingVars e;
    e.dim = dim;
    e.item_tables.push_back(t.parameter(item, Shape::mat(item.size() / dim, dim)));
    e.op_table = t.parameter(op, Shape::mat(op.size() / dim, dim));
    e.widget_table = t.parameter(widget, Shape::mat(widget.size() / dim, dim));
    return e;
  }
};

Tables tables() {
  Tables tb;
  tb.item = {1, 2, 3, 4, 5, 6, 7, 8};
  tb.op = {0.5, -1, 2, 0.25, 1, 1, 1, 1};
  tb.widget = {9, 8, 7, 6};
  return tb;
}

std::vector<double> values(const Tape<double>& t, Var v) {
  const auto s = t.value(v);
  return {s.begin(), s.end()};
}

}  // namespace

TEST(Embed, TransformOpScaledByLogAmount) {
  Tape<double> t;
  const auto tb = tables();
  const auto emb = tb.bind(t);
  EncodedEvent ev;
  ev.kind = EncodedEvent::Kind::kTransformOp;
  ev.row = 0;
  ev.scale = amount_scale(100.0, AmountTransform::kLog);
  EXPECT_NEAR(ev.scale, 4.60517, 1e-5);
  const auto got = values(t, embed_event(t, emb, ev));
  for (std::size_t k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(got[k], tb.op[k] * std::log(100.0));
}

TEST(Embed, UnitAmountGivesZeroVector) {
  Tape<double> t;
  const auto tb = tables();
  const auto emb = tb.bind(t);
  EncodedEvent ev;
  ev.kind = EncodedEvent::Kind::kTransformOp;
  ev.row = 1;
  ev.scale = amount_scale(1.0, AmountTransform::kLog);
  for (double v : values(t, embed_event(t, emb, ev))) EXPECT_EQ(v, 0.0);
}

TEST(Embed, Log1pAlternative) { EXPECT_DOUBLE_EQ(amount_scale(1.0, AmountTransform::kLog1p), std::log(2.0)); }

TEST(Embed, NonPositiveAmountRejected) { EXPECT_THROW(amount_scale(0.0, AmountTransform::kLog), Error); }

TEST(Embed, PadIsZero) {
  Tape<double> t;
  const auto emb = tables().bind(t);
  EncodedEvent ev;
  for (double v : values(t, embed_event(t, emb, ev))) EXPECT_EQ(v, 0.0);
}

TEST(Embed, ItemAndWidgetLookupRows) {
  Tape<double> t;
  const auto emb = tables().bind(t);
  EncodedEvent item;
  item.kind = EncodedEvent::Kind::kItemClick;
  item.row = 1;
  EXPECT_EQ(values(t, embed_event(t, emb, item)), (std::vector<double>{5, 6, 7, 8}));
  EncodedEvent widget;
  widget.kind = EncodedEvent::Kind::kFunctionWidget;
  EXPECT_EQ(values(t, embed_event(t, emb, widget)), (std::vector<double>{9, 8, 7, 6}));
}

TEST(FieldAware, IdentityWeightsApplyRelu) {
  Tape<double> t;
  const std::vector<double> w{1, 0, 0, 0, 1, 0, 0, 0, 1}, b{0, 0, 0}, e{1, -2, 3};
  Var f = field_aware(t, t.constant(e), {t.constant(w, Shape::mat(3, 3)), t.constant(b)});
  EXPECT_EQ(values(t, f), (std::vector<double>{1, 0, 3}));
}

TEST(FieldAware, ZeroInputGivesReluOfBias) {
  Tape<double> t;
  const std::vector<double> w{0.3, -1, 2, 5}, b{-0.5, 0.7}, e{0, 0};
  Var f = field_aware(t, t.constant(e), {t.constant(w, Shape::mat(2, 2)), t.constant(b)});
  EXPECT_EQ(values(t, f), (std::vector<double>{0.0, 0.7}));
}

TEST(FieldAware, MatchesScalarOracle) {
  Rng rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = 1 + rng.below(8);
    std::vector<double> w(d * d), b(d), e(d);
    for (auto* v : {&w, &b, &e})
      for (auto& x : *v) x = rng.normal();
    Tape<double> t;
    const auto got = values(t, field_aware(t, t.constant(e), {t.constant(w, Shape::mat(d, d)), t.constant(b)}));
    for (std::size_t i = 0; i < d; ++i) {
      double s = b[i];
      for (std::size_t j = 0; j < d; ++j) s += w[i * d + j] * e[j];
      ASSERT_NEAR(got[i], s > 0 ? s : 0.0, 1e-12);
    }
  }
}

TEST(FieldAware, NoBiasVariant) {
  Tape<double> t;
  const std::vector<double> w{2, 0, 0, 2}, e{1, -1};
  Var f = field_aware(t, t.constant(e), {t.constant(w, Shape::mat(2, 2)), Var{}});
  EXPECT_EQ(values(t, f), (std::vector<double>{2, 0}));
}

TEST(Normalize, MeanMapsToZero) {
  const std::vector<std::vector<double>> rows{{1, 10}, {3, 30}};
  const auto s = NormalizationStats::fit(rows, 1e-8);
  for (double z : s.apply(std::vector<double>{2, 20})) EXPECT_NEAR(z, 0.0, 1e-15);
}

TEST(Normalize, ConstantFeatureIsZero) {
  const std::vector<std::vector<double>> rows{{5}, {5}, {5}};
  const auto s = NormalizationStats::fit(rows, 1e-8);
  EXPECT_EQ(s.apply(std::vector<double>{5})[0], 0.0);
}

TEST(Normalize, PopulationVarianceStandardization) {
  const std::vector<std::vector<double>> rows{{1}, {2}, {3}};
  const auto s = NormalizationStats::fit(rows, 1e-8);
  EXPECT_DOUBLE_EQ(s.var[0], 2.0 / 3.0);
  const double expect = 1.0 / std::sqrt(2.0 / 3.0 + 1e-8);
  EXPECT_NEAR(s.apply(std::vector<double>{1})[0], -expect, 1e-12);
  EXPECT_NEAR(s.apply(std::vector<double>{3})[0], expect, 1e-12);
  EXPECT_NEAR(expect, 1.2247, 1e-4);
}

TEST(Normalize, WrongWidthThrows) {
  const std::vector<std::vector<double>> rows{{1, 2}};
  EXPECT_THROW(NormalizationStats::fit(rows, 1e-8).apply(std::vector<double>{1}), ShapeError);
}
