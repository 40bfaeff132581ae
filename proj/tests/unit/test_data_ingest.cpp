#include <gtest/gtest.h>

#include <sstream>

#include "draftval/data_ingest.hpp"
#include "test_support.hpp"

namespace draftval {
namespace {

const char* kPicksHeader = "draft_year,draft_position,position_group,outcome_y\n";
const char* kTradesHeader = "trade_year,side,pick_number,years_ahead,trade_id\n";

IngestResult<PickRecord> picks_from(const std::string& body) {
  std::istringstream in(std::string(kPicksHeader) + body);
  return parse_picks(in, "test.csv");
}

std::vector<TradeRecord> trades_from(const std::string& body) {
  std::istringstream in(std::string(kTradesHeader) + body);
  return parse_trades(in, "trades.csv");
}

TEST(DataIngest, ParsesValidPicks) {
  const auto r = picks_from("2013,1,QB,0.05\n2013,2,ED,0\n");
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.records[0].draft_position, 1);
  EXPECT_EQ(r.records[0].position_group, Position::QB);
  EXPECT_DOUBLE_EQ(r.records[0].outcome_y, 0.05);
  EXPECT_EQ(r.records[1].position_group, Position::ED);
  EXPECT_TRUE(r.rejected.empty());
}

TEST(DataIngest, RejectsSpecialistsAndLatePicks) {
  const auto r = picks_from("2013,1,K,0\n2013,257,QB,0.01\n2013,256,LS,0\n2013,256,S,0.01\n");
  EXPECT_EQ(r.records.size(), 1u);
  ASSERT_EQ(r.rejected.size(), 3u);
  EXPECT_EQ(r.rejected[0].line, 2u);
  EXPECT_NE(r.rejected[1].reason.find("257"), std::string::npos);
}

TEST(DataIngest, PickBelowOneIsAnError) {
  try {
    picks_from("2013,0,QB,0.01\n");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("draft_position"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("test.csv:2"), std::string::npos);
  }
}

TEST(DataIngest, OutcomeOutsideUnitIntervalIsAnError) {
  EXPECT_THROW(picks_from("2013,5,QB,1.2\n"), DataError);
  EXPECT_THROW(picks_from("2013,5,QB,-0.1\n"), DataError);
}

TEST(DataIngest, UnknownLabelAndMalformedRowsAreErrors) {
  EXPECT_THROW(picks_from("2013,5,XX,0.1\n"), DataError);
  EXPECT_THROW(picks_from("2013,5,QB\n"), DataError);
  EXPECT_THROW(picks_from("2013,five,QB,0.1\n"), DataError);
  std::istringstream bad_header("year,pick,pos,y\n2013,1,QB,0.1\n");
  EXPECT_THROW(parse_picks(bad_header), DataError);
}

TEST(DataIngest, MissingFileNamesPath) {
  try {
    load_picks("/nonexistent/picks.csv");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/picks.csv"), std::string::npos);
  }
}

TEST(DataIngest, GroupsTradesAndSortsBundles) {
  const auto t = trades_from(
      "2020,down,3,0,7\n2020,up,42,0,7\n2020,up,12,0,7\n"
      "2021,down,40,0,8\n2021,up,71,1,8\n2021,up,50,0,8\n");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0].trade_id, "7");
  EXPECT_EQ(t[0].trade_year, 2020);
  ASSERT_EQ(t[0].down_bundle.size(), 1u);
  EXPECT_EQ(t[0].down_bundle[0].pick_number, 3);
  ASSERT_EQ(t[0].up_bundle.size(), 2u);
  EXPECT_EQ(t[0].up_bundle[0].pick_number, 12);
  EXPECT_EQ(t[0].up_bundle[1].pick_number, 42);
  EXPECT_EQ(t[1].up_bundle[0], (BundlePick{50, 0}));
  EXPECT_EQ(t[1].up_bundle[1], (BundlePick{71, 1}));
}

TEST(DataIngest, TradeWithEmptySideIsAnError) {
  EXPECT_THROW(trades_from("2020,down,3,0,7\n"), DataError);
  EXPECT_THROW(trades_from("2020,sideways,3,0,7\n2020,up,4,0,7\n"), DataError);
}

TEST(DataIngest, BundledDataLoads) {
  const auto picks = load_picks(testing::data_dir() / "picks.csv");
  EXPECT_GT(picks.records.size(), 2500u);
  const auto trades = load_trades(testing::data_dir() / "trades.csv");
  EXPECT_GT(trades.size(), 100u);
  const auto cost = load_cost_table(testing::data_dir() / "cost_table.csv");
  EXPECT_EQ(cost.compensation.size(), kNumPicks);
}

std::string cost_table_text(double first_pick_scale = 1.0) {
  std::string s = "#meta base_cap_dollars=200000000 cap_growth_rate=0.05\n";
  s += "draft_position,season_index,compensation_dollars\n";
  for (int x = 1; x <= 256; ++x) {
    for (int season = 1; season <= 4; ++season) {
      double v = 1000000.0 + (256 - x) * 10000.0;
      if (x == 1) v *= first_pick_scale;
      s += std::to_string(x) + "," + std::to_string(season) + "," + std::to_string(static_cast<long>(v)) + "\n";
    }
  }
  return s;
}

TEST(DataIngest, CostCurveUsesGrowingCap) {
  std::istringstream in(cost_table_text());
  const auto table = parse_cost_table(in);
  EXPECT_DOUBLE_EQ(table.base_cap_dollars, 2e8);
  EXPECT_DOUBLE_EQ(table.cap_growth_rate, 0.05);
  const auto caps = season_caps(table);
  EXPECT_DOUBLE_EQ(caps[0], 2e8);
  EXPECT_NEAR(caps[3], 2e8 * 1.05 * 1.05 * 1.05, 1e-6);
  const PickCurve c = cost_curve(table);
  const double comp = 1000000.0 + 255 * 10000.0;
  double expect = 0.0;
  for (double cap : caps) expect += comp / cap;
  EXPECT_NEAR(c[0], expect / 4.0, 1e-15);
  for (std::size_t i = 1; i < c.size(); ++i) EXPECT_LE(c[i], c[i - 1]);
}

TEST(DataIngest, CostTableRejectsIncreasingCompensation) {
  std::istringstream in(cost_table_text(0.5));
  EXPECT_THROW(parse_cost_table(in), DataError);
}

TEST(DataIngest, EmpiricalMomentsByFilter) {
  std::vector<PickRecord> picks = {
      {2013, 1, Position::QB, 0.0}, {2014, 1, Position::WR, 0.1}, {2015, 1, Position::RB, 0.3},
      {2013, 2, Position::QB, 0.002},
  };
  const auto all = empirical_moments(picks);
  ASSERT_EQ(all.count(1), 1u);
  EXPECT_NEAR(all.at(1).mean, 0.4 / 3.0, 1e-15);
  EXPECT_EQ(all.at(1).count, 3u);
  ASSERT_TRUE(all.at(2).count == 1u);
  EXPECT_FALSE(all.at(2).sd.has_value());

  const auto above = empirical_moments(picks, BustFilter::above_cutoff);
  EXPECT_NEAR(above.at(1).mean, 0.2, 1e-15);
  ASSERT_TRUE(above.at(1).sd.has_value());
  EXPECT_NEAR(*above.at(1).sd, std::sqrt(0.02), 1e-12);
  EXPECT_EQ(above.count(2), 0u);

  const auto below = empirical_moments(picks, BustFilter::at_or_below_cutoff);
  EXPECT_EQ(below.at(1).count, 1u);
  EXPECT_EQ(below.at(2).count, 1u);
}

}  // namespace
}  // namespace draftval
