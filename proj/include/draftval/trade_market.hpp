#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "draftval/types.hpp"
#include "draftval/value_curves.hpp"

namespace draftval {

// v(x, N) = exp(-lambda (x - 1)^beta) (1 + rho)^-N.
struct WeibullParams {
  double lambda = 0.0;
  double beta = 0.0;
  double rho = 0.0;
};

double market_value(const WeibullParams& p, double pick, int years_ahead = 0);
double bundle_value(const WeibullParams& p, std::span<const BundlePick> bundle);
PickCurve market_table(const WeibullParams& p);
// Market curve as a ValueCurve (already 1 at pick 1; no posterior band).
ValueCurve market_curve(const WeibullParams& p);

// paper_form: squared error on log(top down pick) after inverting the
// Weibull for the pick implied by the rest of the trade.
// corrected_form: squared error of the fairness equation itself, expressed
// relative to the value of the top down pick.
enum class ErrorPlacement { paper_form, corrected_form };
enum class FuturePickPolicy { face_value, drop };

std::string_view placement_name(ErrorPlacement m);
std::optional<ErrorPlacement> parse_placement(std::string_view s);
std::string_view future_policy_name(FuturePickPolicy f);
std::optional<FuturePickPolicy> parse_future_policy(std::string_view s);

struct MarketPick {
  double pick = 1.0;
  int years_ahead = 0;
};

// down.front() is the top pick of the trade.
struct MarketTrade {
  std::vector<MarketPick> down;
  std::vector<MarketPick> up;
};

struct MarketFitOptions {
  ErrorPlacement mode = ErrorPlacement::paper_form;
  bool discounted = false;
  FuturePickPolicy future = FuturePickPolicy::drop;  // ignored when discounted
  std::vector<double> lambda_grid = {0.05, 0.1, 0.2, 0.3, 0.5};
  std::vector<double> beta_grid = {0.4, 0.6, 0.8, 1.0, 1.2};
  std::vector<double> rho_grid = {0.1, 0.25};  // discounted fits only
  double rho_max = 0.5;
};

struct MarketFit {
  WeibullParams params;
  double objective = 0.0;
  std::size_t used = 0;
  std::size_t skipped = 0;
  std::size_t total = 0;
  MarketFitOptions options;
};

// Orders each bundle (current-year picks by number, then future picks) and
// converts to the fitting representation.
MarketTrade to_market_trade(const TradeRecord& t);

// Sum of squared residuals over `trades`, all assumed usable.
double market_objective(std::span<const MarketTrade> trades, const WeibullParams& p, ErrorPlacement mode,
                        bool discounted);

// Reason a trade cannot inform the fit, or nullopt when it is usable.
std::optional<std::string> unusable_reason(const MarketTrade& t, const MarketFitOptions& options);

// Multi-start simplex fit. Throws std::invalid_argument with fewer than 10
// usable trades.
MarketFit fit_market(std::span<const MarketTrade> trades, const MarketFitOptions& options = {});
MarketFit fit_market(std::span<const TradeRecord> trades, const MarketFitOptions& options = {});

std::string market_fit_json(const MarketFit& fit, const std::string& config_hash = "");
MarketFit market_fit_from_json(std::string_view text);

enum class MaeWeights { uniform, round1 };
std::string_view mae_weights_name(MaeWeights w);
std::optional<MaeWeights> parse_mae_weights(std::string_view s);

struct ThresholdMatch {
  double r_star = 0.0;
  double mae = 0.0;
  std::vector<std::pair<double, double>> table;  // (r, mae) in ascending r
};

// r* = argmin over the grid of the mean absolute difference between the
// normalized tail curve at r and the market curve (picks 1..256, or 1..32 for
// round1 weights). Ties go to the smaller r.
ThresholdMatch best_matching_threshold(const std::function<PickCurve(double)>& tail_curve, const PickCurve& market,
                                       std::span<const double> grid, MaeWeights weights = MaeWeights::uniform);

// Uses posterior-mean normalized tail curves from `engine`.
ThresholdMatch best_matching_threshold(const CurveEngine& engine, const WeibullParams& market,
                                       std::span<const double> grid, MaeWeights weights = MaeWeights::uniform,
                                       Scope scope = Scope::all());

}  // namespace draftval
