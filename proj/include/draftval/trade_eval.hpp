#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "draftval/trade_market.hpp"
#include "draftval/types.hpp"
#include "draftval/value_curves.hpp"

namespace draftval {

// Static Johnson trade chart (points per pick 1..256; picks beyond its last
// listed entry carry the minimum value).
const PickCurve& johnson_chart();

// A per-pick value table used for trade arithmetic. `draws` optionally holds
// num_draws x 256 per-draw values for credible bands. Future picks are
// discounted by (1 + discount_rate)^-years_ahead.
struct CurveTable {
  std::string id;
  PickCurve mean{};
  std::vector<double> draws;
  double discount_rate = 0.0;

  std::size_t num_draws() const { return draws.size() / kNumPicks; }
};

CurveTable table_from_curve(std::string id, const ValueCurve& curve);
// Per-draw normalized values for credible bands.
CurveTable table_from_engine(std::string id, const CurveEngine& engine, CurveKind kind, std::optional<double> r,
                             Scope scope);
// Discount applies only when `discounted` is set.
CurveTable table_from_market(const WeibullParams& params, bool discounted, std::string id = "market");
CurveTable johnson_table();

// Additive value of a bundle; throws std::out_of_range for a pick outside
// 1..256 and std::invalid_argument for an empty bundle.
double table_bundle_value(const CurveTable& table, std::span<const BundlePick> bundle);

struct PickValue {
  BundlePick pick;
  double value = 0.0;
};

// gain_down = value(down bundle) / value(up bundle): the return to the team
// trading up, which receives the down bundle. gain_up is its reciprocal.
// Both are absent when either side's value is not positive.
struct CurveEvaluation {
  std::string curve_id;
  double down_value = 0.0;
  double up_value = 0.0;
  double difference = 0.0;  // down_value - up_value
  std::optional<double> gain_down;
  std::optional<double> gain_up;
  std::optional<CurveEntry> down_band;
  std::optional<CurveEntry> up_band;
  std::vector<PickValue> down_breakdown;
  std::vector<PickValue> up_breakdown;
};

struct TradeEvaluation {
  std::vector<BundlePick> down;
  std::vector<BundlePick> up;
  std::vector<CurveEvaluation> curves;
};

TradeEvaluation evaluate_trade(const TradeRecord& trade, std::span<const CurveTable> curves);

std::string evaluation_json(const TradeEvaluation& e);

// Expected number of players above r in the bundle: per-draw sums of the
// tail probability, summarized. With `normalized` each draw is divided by its
// anchor value (pick 1, or QB pick 1 for position scopes).
CurveEntry expected_elite_count(const CurveEngine& engine, std::span<const BundlePick> bundle, double r, Scope scope,
                                bool normalized = false);

}  // namespace draftval
