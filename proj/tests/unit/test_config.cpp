#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "huihen/pipeline.hpp"

using namespace huihen;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, DefaultsMatchDocumentedValues) {
  const auto c = Config::defaults();
  EXPECT_EQ(c.get_int("session.gap_seconds"), 3600);
  EXPECT_EQ(c.get_int("session.min_events"), 3);
  EXPECT_EQ(c.get_int("session.max_sessions"), 50);
  EXPECT_EQ(c.get_int("session.max_events"), 25);
  EXPECT_EQ(c.get_int("embed.dim"), 10);
  EXPECT_EQ(c.get_int("gru.hidden"), 30);
  EXPECT_EQ(c.get_int_list("mlp.widths"), (std::vector<std::int64_t>{50, 25, 2}));
  EXPECT_EQ(c.get_double("mlp.dropout"), 0.6);
  EXPECT_EQ(c.get_double("prelu.init"), 0.5);
  EXPECT_EQ(c.get_double("train.learning_rate"), 0.001);
  EXPECT_EQ(c.get_int("train.batch_size"), 64);
}

TEST(Config, OverridesParseByDefaultType) {
  auto c = Config::defaults();
  c.set("gru.time_aware=off");
  c.set("train.learning_rate=0.05");
  c.set("embed.dim", "12");
  c.set("mlp.widths=[8,4,2]");
  c.set("data.taxonomy=bank.csv");
  EXPECT_FALSE(c.get_bool("gru.time_aware"));
  EXPECT_EQ(c.get_double("train.learning_rate"), 0.05);
  EXPECT_EQ(c.get_int("embed.dim"), 12);
  EXPECT_EQ(c.get_int_list("mlp.widths"), (std::vector<std::int64_t>{8, 4, 2}));
  EXPECT_EQ(c.get_string("data.taxonomy"), "bank.csv");
  c.set("mlp.widths=6,2");
  EXPECT_EQ(c.get_int_list("mlp.widths"), (std::vector<std::int64_t>{6, 2}));
}

TEST(Config, UnknownKeyNamed) {
  auto c = Config::defaults();
  EXPECT_EQ(error_of([&] { c.set("gru.hiden=3"); }), "config: unknown key 'gru.hiden'");
}

TEST(Config, TypeErrorsNamed) {
  auto c = Config::defaults();
  EXPECT_NE(error_of([&] { c.set("embed.dim=ten"); }).find("'embed.dim'"), std::string::npos);
  EXPECT_NE(error_of([&] { c.set("gru.time_aware=maybe"); }).find("'gru.time_aware'"), std::string::npos);
  EXPECT_NE(error_of([&] { c.merge_json(nlohmann::json::parse(R"({"embed": {"dim": "x"}})")); }).find("embed.dim"),
            std::string::npos);
}

TEST(Config, LayeringFileThenOverride) {
  const std::string path = ::testing::TempDir() + "huihen_cfg.json";
  {
    std::ofstream out(path);
    out << R"({"train": {"epochs": 3, "seed": 9}, "gru.hidden": 8})";
  }
  auto c = Config::defaults();
  c.merge_file(path);
  EXPECT_EQ(c.get_int("train.epochs"), 3);
  EXPECT_EQ(c.get_int("gru.hidden"), 8);
  c.set("train.epochs=5");
  EXPECT_EQ(c.get_int("train.epochs"), 5);
  EXPECT_EQ(c.get_int("train.seed"), 9);
  std::remove(path.c_str());
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* name : {"default.json", "strong_signal.json"}) {
    auto c = Config::defaults();
    EXPECT_NO_THROW(c.merge_file(std::string(HUIHEN_SOURCE_DIR) + "/configs/" + name)) << name;
  }
}

TEST(Config, InvalidFileRejected) {
  auto c = Config::defaults();
  EXPECT_THROW(c.merge_file("/nonexistent/config.json"), ConfigError);
}

TEST(Settings, RangeChecksNameTheKey) {
  auto c = Config::defaults();
  c.set("train.batch_size=0");
  EXPECT_NE(error_of([&] { train_options(c, false); }).find("'train.batch_size'"), std::string::npos);
  c = Config::defaults();
  c.set("mlp.widths=8,3");
  EXPECT_NE(error_of([&] { model_spec(c, 4); }).find("'mlp.widths'"), std::string::npos);
  c = Config::defaults();
  c.set("train.precision=16");
  EXPECT_THROW(precision_bits(c), ConfigError);
}

TEST(Settings, DropoutSemantics) {
  auto c = Config::defaults();
  EXPECT_DOUBLE_EQ(dropout_keep(c), 0.6);
  c.set("dropout.semantics=drop");
  EXPECT_DOUBLE_EQ(dropout_keep(c), 0.4);
  c.set("mlp.dropout=1.0");
  EXPECT_THROW(dropout_keep(c), ConfigError);
}

TEST(Settings, GuidanceOnlyInPretrain) {
  auto c = Config::defaults();
  EXPECT_EQ(train_options(c, true).loss, LossMode::kCePlusSymKl);
  EXPECT_EQ(train_options(c, false).loss, LossMode::kPlainCe);
  c.set("train.teacher_guidance=off");
  EXPECT_EQ(train_options(c, true).loss, LossMode::kPlainCe);
  c = Config::defaults();
  c.set("loss.mode=plain_ce");
  EXPECT_FALSE(guidance_enabled(c));
}

TEST(Settings, FreezeAppliesToFullStageOnly) {
  auto c = Config::defaults();
  c.set("upi.freeze=on");
  EXPECT_TRUE(train_options(c, false).freeze_upi);
  EXPECT_FALSE(train_options(c, true).freeze_upi);
}
