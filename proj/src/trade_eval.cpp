#include "draftval/trade_eval.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace draftval {

namespace {

std::size_t pick_index(const BundlePick& b) {
  if (b.pick_number < kMinPick || b.pick_number > kMaxPick) {
    throw std::out_of_range("pick " + std::to_string(b.pick_number) + " is outside 1..256");
  }
  if (b.years_ahead < 0) throw std::out_of_range("years_ahead must be >= 0");
  return static_cast<std::size_t>(b.pick_number - 1);
}

double discount_factor(const CurveTable& t, const BundlePick& b) {
  return b.years_ahead == 0 || t.discount_rate == 0.0 ? 1.0 : std::pow(1.0 + t.discount_rate, -b.years_ahead);
}

// Per-draw bundle totals; empty when the table has no draws.
std::vector<double> draw_totals(const CurveTable& t, std::span<const BundlePick> bundle) {
  const std::size_t n = t.num_draws();
  std::vector<double> out(n, 0.0);
  for (std::size_t d = 0; d < n; ++d) {
    for (const auto& b : bundle) out[d] += t.draws[d * kNumPicks + pick_index(b)] * discount_factor(t, b);
  }
  return out;
}

nlohmann::ordered_json bundle_json(std::span<const BundlePick> bundle) {
  auto a = nlohmann::ordered_json::array();
  for (const auto& b : bundle) a.push_back({{"pick", b.pick_number}, {"years_ahead", b.years_ahead}});
  return a;
}

nlohmann::ordered_json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json band_json(const std::optional<CurveEntry>& e) {
  if (!e) return nullptr;
  return {{"mean", e->mean}, {"lo95", e->lo95}, {"hi95", e->hi95}};
}

nlohmann::ordered_json breakdown_json(const std::vector<PickValue>& items) {
  auto a = nlohmann::ordered_json::array();
  for (const auto& pv : items) {
    a.push_back({{"pick", pv.pick.pick_number}, {"years_ahead", pv.pick.years_ahead}, {"value", pv.value}});
  }
  return a;
}

}  // namespace

CurveTable table_from_curve(std::string id, const ValueCurve& curve) {
  if (curve.values.size() != kNumPicks) throw std::invalid_argument("curve must have 256 entries");
  CurveTable t;
  t.id = std::move(id);
  for (std::size_t i = 0; i < kNumPicks; ++i) t.mean[i] = curve.values[i].mean;
  return t;
}

CurveTable table_from_engine(std::string id, const CurveEngine& engine, CurveKind kind, std::optional<double> r,
                             Scope scope) {
  const std::optional<double> rr = kind_needs_threshold(kind) ? r : std::nullopt;
  CurveTable t;
  t.id = std::move(id);
  t.draws = engine.functional(kind, rr, scope);
  const auto anchors = engine.anchor_values(kind, rr, scope);
  const std::size_t n = anchors.size();
  double anchor_mean = 0.0;
  for (double a : anchors) anchor_mean += a;
  if (!(std::fabs(anchor_mean / static_cast<double>(n)) >= 1e-9)) {
    throw std::domain_error("normalization anchor has near-zero posterior mass");
  }
  for (std::size_t d = 0; d < n; ++d) {
    for (std::size_t i = 0; i < kNumPicks; ++i) t.draws[d * kNumPicks + i] /= anchors[d];
  }
  for (std::size_t i = 0; i < kNumPicks; ++i) {
    double s = 0.0;
    for (std::size_t d = 0; d < n; ++d) s += t.draws[d * kNumPicks + i];
    t.mean[i] = s / static_cast<double>(n);
  }
  return t;
}

CurveTable table_from_market(const WeibullParams& params, bool discounted, std::string id) {
  CurveTable t;
  t.id = std::move(id);
  t.mean = market_table(params);
  t.discount_rate = discounted ? params.rho : 0.0;
  return t;
}

double table_bundle_value(const CurveTable& table, std::span<const BundlePick> bundle) {
  if (bundle.empty()) throw std::invalid_argument("bundle is empty");
  double v = 0.0;
  for (const auto& b : bundle) v += table.mean[pick_index(b)] * discount_factor(table, b);
  return v;
}

TradeEvaluation evaluate_trade(const TradeRecord& trade, std::span<const CurveTable> curves) {
  if (curves.empty()) throw std::invalid_argument("evaluate_trade: no curves requested");
  if (trade.down_bundle.empty() || trade.up_bundle.empty()) {
    throw std::invalid_argument("evaluate_trade: both bundles must be non-empty");
  }
  for (const auto* side : {&trade.down_bundle, &trade.up_bundle}) {
    for (const auto& b : *side) pick_index(b);
  }
  TradeEvaluation out;
  out.down = trade.down_bundle;
  out.up = trade.up_bundle;
  for (const auto& table : curves) {
    CurveEvaluation e;
    e.curve_id = table.id;
    for (const auto& b : trade.down_bundle) {
      e.down_breakdown.push_back({b, table.mean[pick_index(b)] * discount_factor(table, b)});
    }
    for (const auto& b : trade.up_bundle) {
      e.up_breakdown.push_back({b, table.mean[pick_index(b)] * discount_factor(table, b)});
    }
    e.down_value = table_bundle_value(table, trade.down_bundle);
    e.up_value = table_bundle_value(table, trade.up_bundle);
    e.difference = e.down_value - e.up_value;
    if (e.down_value > 0.0 && e.up_value > 0.0) {
      e.gain_down = e.down_value / e.up_value;
      e.gain_up = e.up_value / e.down_value;
    }
    if (table.num_draws() > 0) {
      e.down_band = summarize(draw_totals(table, trade.down_bundle));
      e.up_band = summarize(draw_totals(table, trade.up_bundle));
    }
    out.curves.push_back(std::move(e));
  }
  return out;
}

std::string evaluation_json(const TradeEvaluation& e) {
  nlohmann::ordered_json j;
  j["down"] = bundle_json(e.down);
  j["up"] = bundle_json(e.up);
  auto curves = nlohmann::ordered_json::array();
  for (const auto& c : e.curves) {
    nlohmann::ordered_json cj;
    cj["curve"] = c.curve_id;
    cj["down_value"] = c.down_value;
    cj["up_value"] = c.up_value;
    cj["difference"] = c.difference;
    cj["gain_down"] = optional_json(c.gain_down);
    cj["gain_up"] = optional_json(c.gain_up);
    cj["down_band"] = band_json(c.down_band);
    cj["up_band"] = band_json(c.up_band);
    cj["down_breakdown"] = breakdown_json(c.down_breakdown);
    cj["up_breakdown"] = breakdown_json(c.up_breakdown);
    curves.push_back(std::move(cj));
  }
  j["curves"] = std::move(curves);
  return j.dump(2);
}

CurveEntry expected_elite_count(const CurveEngine& engine, std::span<const BundlePick> bundle, double r, Scope scope,
                                bool normalized) {
  if (bundle.empty()) throw std::invalid_argument("expected_elite_count: bundle is empty");
  for (const auto& b : bundle) pick_index(b);
  const auto draws = engine.functional(CurveKind::tail, r, scope);
  std::vector<double> anchors;
  if (normalized) anchors = engine.anchor_values(CurveKind::tail, r, scope);
  const std::size_t n = engine.num_draws();
  std::vector<double> totals(n, 0.0);
  for (std::size_t d = 0; d < n; ++d) {
    for (const auto& b : bundle) totals[d] += draws[d * kNumPicks + pick_index(b)];
    if (normalized) totals[d] /= anchors[d];
  }
  return summarize(std::move(totals));
}

}  // namespace draftval
