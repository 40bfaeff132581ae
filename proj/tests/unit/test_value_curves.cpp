#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "draftval/value_curves.hpp"
#include "posterior_fixtures.hpp"
#include "test_support.hpp"

namespace draftval {
namespace {

using testing::kTruthAgnostic;

TEST(ValueCurves, BetaCdfMatchesQuadrature) {
  for (double mu : {0.05, 0.2, 0.5, 0.8}) {
    for (double phi : {0.7, 5.0, 40.0}) {
      for (double y : {0.001, 0.01, 0.1, 0.3, 0.6, 0.95}) {
        EXPECT_NEAR(beta_cdf(y, mu, phi), testing::beta_cdf_quadrature(y, mu, phi), 1e-10)
            << "mu=" << mu << " phi=" << phi << " y=" << y;
      }
    }
  }
  EXPECT_EQ(beta_cdf(0.0, 0.3, 2.0), 0.0);
  EXPECT_EQ(beta_cdf(1.0, 0.3, 2.0), 1.0);
  EXPECT_THROW(beta_cdf(0.5, 0.0, 2.0), std::domain_error);
  EXPECT_THROW(beta_cdf(0.5, 0.3, -1.0), std::domain_error);
}

TEST(ValueCurves, PointFunctionalsMatchDirectFormulas) {
  const auto& c = kTruthAgnostic;
  const double yb = kDefaultYBust;
  const auto cost = testing::linear_cost();
  for (double x : {1.0, 17.0, 100.0, 256.0}) {
    const auto b = testing::de_boor_basis(x);
    const double bp = testing::logistic(c[0] + c[1] * x);
    const double mu = testing::logistic(c[2] * b[0] + c[3] * b[1] + c[4] * b[2] + c[5] * b[3]);
    const double phi = std::exp(c[6] + c[7] * x);
    const double perf = bp * yb / 2.0 + (1.0 - bp) * mu;
    EXPECT_NEAR(expected_performance(Variant::agnostic, c, x, yb, Scope::all()), perf, 1e-14);
    const double cx = cost[static_cast<std::size_t>(x) - 1];
    EXPECT_NEAR(expected_surplus(Variant::agnostic, c, x, yb, cost, Scope::all()), perf - cx, 1e-14);
    const double tail = (1.0 - bp) * (1.0 - testing::beta_cdf_quadrature(0.2, mu, phi));
    EXPECT_NEAR(tail_probability(Variant::agnostic, c, x, 0.2, yb, Scope::all()), tail, 1e-10);
    const double stail = (1.0 - bp) * (1.0 - testing::beta_cdf_quadrature(0.2 + cx, mu, phi));
    EXPECT_NEAR(surplus_tail_probability(Variant::agnostic, c, x, 0.2, yb, cost, Scope::all()), stail, 1e-10);
  }
}

TEST(ValueCurves, TailDecreasesInThreshold) {
  for (double x : {1.0, 64.0, 200.0}) {
    double prev = 1.0;
    for (double r = 0.005; r < 1.0; r += 0.01) {
      const double t = tail_probability(Variant::agnostic, kTruthAgnostic, x, r, kDefaultYBust, Scope::all());
      EXPECT_LE(t, prev);
      prev = t;
    }
  }
}

TEST(ValueCurves, ScopeAndThresholdErrors) {
  const auto& c = kTruthAgnostic;
  EXPECT_THROW(tail_probability(Variant::agnostic, c, 5, 0.2, kDefaultYBust, Scope::qb()), std::invalid_argument);
  EXPECT_THROW(tail_probability(Variant::agnostic, c, 5, 0.001, kDefaultYBust, Scope::all()), std::domain_error);
  EXPECT_THROW(expected_performance(Variant::agnostic, c, 0.0, kDefaultYBust, Scope::all()), std::domain_error);
  const auto hier = testing::fake_hierarchical_posterior(4, 1);
  EXPECT_THROW(expected_performance(Variant::hierarchical, hier.draw(0), 5, kDefaultYBust, Scope::all()),
               std::invalid_argument);
}

TEST(ValueCurves, ScopeNamesRoundTrip) {
  for (const char* name : {"all", "qb", "not_qb", "WR", "S"}) {
    const auto s = parse_scope(name);
    ASSERT_TRUE(s) << name;
    EXPECT_EQ(parse_scope(scope_name(*s)), s);
  }
  EXPECT_EQ(parse_scope("QB"), Scope::qb());
  EXPECT_FALSE(parse_scope("kicker"));
}

TEST(ValueCurves, SummarizeQuantilesAndBandWidening) {
  const auto e = summarize({5, 1, 3, 2, 4});
  EXPECT_DOUBLE_EQ(e.mean, 3.0);
  EXPECT_NEAR(e.lo95, 1.1, 1e-15);
  EXPECT_NEAR(e.hi95, 4.9, 1e-15);
  std::vector<double> skew(100, 0.0);
  skew.back() = 1000.0;
  const auto w = summarize(skew);
  EXPECT_DOUBLE_EQ(w.mean, 10.0);
  EXPECT_DOUBLE_EQ(w.hi95, 10.0);
  EXPECT_THROW(summarize({}), std::invalid_argument);
}

TEST(ValueCurves, NormalizationIsPerDrawAndScaleInvariant) {
  const std::vector<double> draws = {2, 1, 4, 4, 1, 1};  // 2 draws x 3 picks
  const std::vector<double> anchors = {2, 4};
  const auto a = normalize_draws(draws, anchors);
  EXPECT_DOUBLE_EQ(a[0].mean, 1.0);
  EXPECT_DOUBLE_EQ(a[1].mean, (1.0 / 2.0 + 1.0 / 4.0) / 2.0);
  EXPECT_DOUBLE_EQ(a[2].mean, (4.0 / 2.0 + 1.0 / 4.0) / 2.0);
  std::vector<double> scaled = draws, scaled_anchors = anchors;
  for (auto& v : scaled) v *= 7.5;
  for (auto& v : scaled_anchors) v *= 7.5;
  const auto b = normalize_draws(scaled, scaled_anchors);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(b[i].mean, a[i].mean, 1e-15);
  EXPECT_THROW(normalize_draws(draws, std::vector<double>{1e-12, -1e-12}), std::domain_error);
  EXPECT_THROW(normalize_draws({1, 2, 3}, std::vector<double>{1, 1}), std::invalid_argument);
}

TEST(CurveEngine, AnchoredAtPickOneAndMatchesPointFunctionals) {
  const auto post = testing::fake_agnostic_posterior(40, 3);
  CurveEngine engine(post);
  engine.set_cost_curve(testing::linear_cost());
  for (auto [kind, r] : {std::pair{CurveKind::performance, std::optional<double>{}},
                         std::pair{CurveKind::surplus, std::optional<double>{}},
                         std::pair{CurveKind::tail, std::optional<double>{0.178}},
                         std::pair{CurveKind::surplus_tail, std::optional<double>{0.1}}}) {
    const auto curve = engine.curve(kind, r, Scope::all());
    EXPECT_NEAR(curve.at(1).mean, 1.0, 1e-12) << curve_kind_name(kind);
    EXPECT_EQ(curve.anchor, "pick1");
    const auto raw = engine.functional(kind, r, Scope::all());
    // Per-draw normalization: the curve mean is the mean of ratios.
    for (int pick : {2, 50, 256}) {
      double ratio = 0.0;
      for (std::size_t d = 0; d < engine.num_draws(); ++d) {
        ratio += raw[d * kNumPicks + static_cast<std::size_t>(pick - 1)] / raw[d * kNumPicks];
      }
      EXPECT_NEAR(curve.at(pick).mean, ratio / static_cast<double>(engine.num_draws()), 1e-12);
      EXPECT_LE(curve.at(pick).lo95, curve.at(pick).mean);
      EXPECT_GE(curve.at(pick).hi95, curve.at(pick).mean);
    }
  }
  const auto draw0 = post.draw(0);
  const auto raw = engine.functional(CurveKind::tail, 0.2, Scope::all());
  EXPECT_NEAR(raw[99], tail_probability(Variant::agnostic, draw0, 100, 0.2, kDefaultYBust, Scope::all()), 1e-13);
}

TEST(CurveEngine, ThinsDrawsEvenly) {
  const auto post = testing::fake_agnostic_posterior(10, 3);
  EXPECT_EQ(CurveEngine(post).num_draws(), 10u);
  EXPECT_EQ(CurveEngine(post, 4).num_draws(), 4u);
  EXPECT_EQ(CurveEngine(post, 100).num_draws(), 10u);
  PosteriorSamples empty;
  empty.names = param_names(Variant::agnostic);
  EXPECT_THROW(CurveEngine{empty}, std::invalid_argument);
}

TEST(CurveEngine, RejectsInvalidRequests) {
  const auto post = testing::fake_agnostic_posterior(6, 3);
  const CurveEngine engine(post);
  EXPECT_THROW(engine.curve(CurveKind::surplus, std::nullopt, Scope::all()), std::invalid_argument);
  EXPECT_THROW(engine.curve(CurveKind::tail, std::nullopt, Scope::all()), std::invalid_argument);
  EXPECT_THROW(engine.curve(CurveKind::tail, 0.001, Scope::all()), std::domain_error);
  EXPECT_THROW(engine.curve(CurveKind::market, std::nullopt, Scope::all()), std::invalid_argument);
  EXPECT_THROW(engine.curve(CurveKind::performance, std::nullopt, Scope::qb()), std::invalid_argument);
}

TEST(CurveEngine, HierarchicalScopesAnchorAtQbPickOne) {
  const auto post = testing::fake_hierarchical_posterior(20, 5);
  const CurveEngine engine(post);
  const auto qb = engine.curve(CurveKind::tail, 0.2, Scope::qb());
  EXPECT_NEAR(qb.at(1).mean, 1.0, 1e-12);
  EXPECT_EQ(qb.anchor, "qb_pick1");
  const auto nq = engine.curve(CurveKind::tail, 0.2, Scope::not_qb());
  EXPECT_LT(nq.at(1).mean, 1.0);
  // not_qb is the per-draw mean of the ten non-QB blocks.
  const auto raw = engine.functional(CurveKind::tail, 0.2, Scope::not_qb());
  double manual = 0.0;
  for (std::size_t p = 1; p < kNumPositions; ++p) {
    manual += tail_probability(Variant::hierarchical, post.draw(0), 10, 0.2, kDefaultYBust,
                               Scope::of(static_cast<Position>(p)));
  }
  EXPECT_NEAR(raw[9], manual / 10.0, 1e-13);
  const auto wr = engine.curve(CurveKind::performance, std::nullopt, Scope::of(Position::WR));
  EXPECT_LT(wr.at(1).mean, 1.0);
}

TEST(TraditionalCurve, ReproducesLinearAndConstantOutcomes) {
  std::vector<PickRecord> picks;
  for (int x = 1; x <= 256; x += 3) picks.push_back({2013, x, Position::QB, 0.4 - 0.001 * x});
  const auto lin = traditional_mean_curve(picks);
  for (int x : {1, 100, 256}) EXPECT_NEAR(lin.at(x).mean, (0.4 - 0.001 * x) / 0.399, 1e-10);
  for (auto& p : picks) p.outcome_y = 0.2;
  const auto flat = traditional_mean_curve(picks);
  for (const auto& e : flat.values) EXPECT_NEAR(e.mean, 1.0, 1e-10);
  EXPECT_THROW(traditional_mean_curve({}), std::invalid_argument);
  std::vector<PickRecord> one_pick(10, {2013, 5, Position::QB, 0.1});
  EXPECT_THROW(traditional_mean_curve(one_pick), std::invalid_argument);
}

TEST(CurveCsv, HeaderAndRows) {
  const auto post = testing::fake_agnostic_posterior(8, 1);
  const auto curve = CurveEngine(post).curve(CurveKind::tail, 0.178, Scope::all());
  const std::string csv = curve_csv(curve, {"m1", "c2"});
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# kind=tail r=0.178 scope=all anchor=pick1 model_hash=m1 config_hash=c2");
  std::getline(in, line);
  EXPECT_EQ(line, "pick,mean,lo95,hi95");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 256);
  EXPECT_NE(csv.find("\n1,1,"), std::string::npos);
}

}  // namespace
}  // namespace draftval
