#include <gtest/gtest.h>

#include "draftval/run_config.hpp"
#include "json.hpp"

namespace draftval {
namespace {

TEST(CurveSpec, ParsesKindThresholdAndScope) {
  const auto s = parse_curve_spec("tail:0.178@qb");
  ASSERT_TRUE(s.kind);
  EXPECT_EQ(*s.kind, CurveKind::tail);
  EXPECT_EQ(*s.r, 0.178);
  EXPECT_EQ(*s.scope, Scope::qb());
  EXPECT_EQ(curve_spec_string(s), "tail:0.178@qb");
  EXPECT_TRUE(parse_curve_spec("johnson").is_johnson());
  EXPECT_EQ(curve_spec_string(parse_curve_spec(" surplus ")), "surplus");
  EXPECT_EQ(curve_spec_string(parse_curve_spec("performance@WR")), "performance@WR");
}

TEST(CurveSpec, RejectsMalformedSpecs) {
  for (const char* bad : {"tail", "surplus:0.2", "tail:abc", "tail:0.2@kicker", "bogus", "johnson:0.2", "johnson@qb",
                          "tail:0.2x", "tail:inf"}) {
    EXPECT_THROW(parse_curve_spec(bad), std::invalid_argument) << bad;
  }
}

TEST(CurveSpec, ParsesLists) {
  const auto list = parse_curve_specs("market, surplus,tail:0.178");
  ASSERT_EQ(list.size(), 3u);
  EXPECT_EQ(*list[0].kind, CurveKind::market);
  EXPECT_EQ(*list[2].r, 0.178);
  EXPECT_THROW(parse_curve_specs(""), std::invalid_argument);
  EXPECT_THROW(parse_curve_specs("market,,tail:0.2"), std::invalid_argument);
}

TEST(CurveSpec, FileNames) {
  EXPECT_EQ(curve_file_name(CurveKind::tail, 0.178, Scope::qb()), "curve_tail_r0.178_qb.csv");
  EXPECT_EQ(curve_file_name(CurveKind::surplus, std::nullopt, Scope::all()), "curve_surplus_all.csv");
  EXPECT_EQ(curve_file_name(CurveKind::performance, 0.3, Scope::of(Position::WR)), "curve_performance_WR.csv");
}

TEST(RunConfig, DefaultsValidateAndRoundTrip) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  c.curves = parse_curve_specs("surplus,tail:0.2@not_qb");
  c.sampler.seed = 99;
  c.market_mode = ErrorPlacement::corrected_form;
  c.market_discounted = true;
  c.mae_weights = MaeWeights::round1;
  const auto back = RunConfig::from_json(c.to_json());
  EXPECT_EQ(back.sampler.seed, 99u);
  EXPECT_EQ(back.market_mode, ErrorPlacement::corrected_form);
  EXPECT_TRUE(back.market_discounted);
  EXPECT_EQ(back.mae_weights, MaeWeights::round1);
  ASSERT_EQ(back.curves.size(), 2u);
  EXPECT_EQ(curve_spec_string(back.curves[1]), "tail:0.2@not_qb");
  EXPECT_EQ(back.hash(), c.hash());
  EXPECT_EQ(back.to_json(), c.to_json());
  const auto j = nlohmann::json::parse(c.to_json());
  EXPECT_EQ(j["config_hash"], c.hash());
}

TEST(RunConfig, HashCoversNumericFieldsOnly) {
  RunConfig a;
  RunConfig b = a;
  b.output_dir = "elsewhere";
  b.sampler.threads = 8;
  b.picks_path = "/tmp/other.csv";
  EXPECT_EQ(a.hash(), b.hash());
  b.sampler.seed = 2;
  EXPECT_NE(a.hash(), b.hash());
  RunConfig c = a;
  c.settings.y_bust = 0.01;
  EXPECT_NE(a.hash(), c.hash());
  RunConfig d = a;
  d.r_grid_step = 0.002;
  EXPECT_NE(a.hash(), d.hash());
}

TEST(RunConfig, ValidationNamesTheProblem) {
  auto expect_invalid = [](RunConfig c, const std::string& needle) {
    try {
      c.validate();
      FAIL() << "expected failure mentioning " << needle;
    } catch (const std::invalid_argument& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  RunConfig c;
  c.settings.y_bust = 0.0;
  expect_invalid(c, "y_bust");
  c = {};
  c.sampler.burn_in = c.sampler.iterations;
  expect_invalid(c, "burn-in");
  c = {};
  c.sampler.chains = 0;
  expect_invalid(c, "chains");
  c = {};
  c.curves = {parse_curve_spec("tail:0.001")};
  expect_invalid(c, "threshold");
  c = {};
  c.curves = {parse_curve_spec("johnson")};
  expect_invalid(c, "johnson");
  c = {};
  c.r_grid_step = 0.0;
  expect_invalid(c, "step");
  c = {};
  c.r_grid_min = 0.4;
  expect_invalid(c, "grid");
}

TEST(RunConfig, FromJsonErrors) {
  EXPECT_THROW(RunConfig::from_json("{"), std::invalid_argument);
  EXPECT_THROW(RunConfig::from_json(R"({"variant":"mixed"})"), std::invalid_argument);
  EXPECT_THROW(RunConfig::from_json(R"({"sampler":{"chains":"four"}})"), std::invalid_argument);
  EXPECT_THROW(RunConfig::from_json(R"({"market":{"mode":"ols"}})"), std::invalid_argument);
  const auto partial = RunConfig::from_json(R"({"variant":"hierarchical","sampler":{"iterations":100,"burn_in":50}})");
  EXPECT_EQ(partial.variant, Variant::hierarchical);
  EXPECT_EQ(partial.sampler.iterations, 100);
  EXPECT_EQ(partial.sampler.chains, 4);
}

TEST(RunConfig, ThresholdGridIsInclusiveAndClean) {
  RunConfig c;
  const auto g = c.threshold_grid();
  ASSERT_EQ(g.size(), 301u);
  EXPECT_EQ(g.front(), 0.05);
  EXPECT_EQ(g.back(), 0.35);
  EXPECT_EQ(g[147], 0.197);
}

}  // namespace
}  // namespace draftval
