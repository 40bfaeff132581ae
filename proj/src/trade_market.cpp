#include "draftval/trade_market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "draftval/optimize.hpp"
#include "json.hpp"

namespace draftval {

namespace {

constexpr std::size_t kMinUsableTrades = 10;
// Lower bound on the infeasibility penalty so infeasible trades still count
// when every feasible residual is zero.
constexpr double kPenaltyFloor = 0.1;

double discount(double rho, int years_ahead) { return years_ahead == 0 ? 1.0 : std::pow(1.0 + rho, -years_ahead); }

double weibull_exponent(const WeibullParams& p, double pick) {
  return pick <= 1.0 ? 0.0 : p.lambda * std::pow(pick - 1.0, p.beta);
}

int effective_years(const MarketPick& m, bool discounted) { return discounted ? m.years_ahead : 0; }

double pick_value(const WeibullParams& p, const MarketPick& m, bool discounted) {
  return std::exp(-weibull_exponent(p, m.pick)) * discount(p.rho, effective_years(m, discounted));
}

// Value of `m` relative to the top down pick, computed in log space so very
// steep curves do not underflow.
double relative_value(const WeibullParams& p, const MarketPick& m, const MarketPick& top, bool discounted) {
  const double e = std::min(700.0, weibull_exponent(p, top.pick) - weibull_exponent(p, m.pick));
  const double d = discount(p.rho, effective_years(m, discounted)) / discount(p.rho, effective_years(top, discounted));
  return std::exp(e) * d;
}

// Residual of the inverted-Weibull regression, or nullopt when the inner log
// argument is not positive.
std::optional<double> paper_residual(const MarketTrade& t, const WeibullParams& p, bool discounted) {
  const MarketPick& top = t.down.front();
  double v = 0.0;
  for (const auto& m : t.up) v += pick_value(p, m, discounted);
  for (std::size_t j = 1; j < t.down.size(); ++j) v -= pick_value(p, t.down[j], discounted);
  v /= discount(p.rho, effective_years(top, discounted));
  if (!(v > 0.0)) return std::nullopt;
  // Implied value at or above a first pick maps to pick 1.
  const double implied = v >= 1.0 ? 1.0 : 1.0 + std::pow(-std::log(v) / p.lambda, 1.0 / p.beta);
  return std::log(top.pick) - std::log(implied);
}

double corrected_residual(const MarketTrade& t, const WeibullParams& p, bool discounted) {
  const MarketPick& top = t.down.front();
  double r = 0.0;
  for (const auto& m : t.down) r += relative_value(p, m, top, discounted);
  for (const auto& m : t.up) r -= relative_value(p, m, top, discounted);
  return r;
}

bool params_valid(const WeibullParams& p) {
  return std::isfinite(p.lambda) && std::isfinite(p.beta) && std::isfinite(p.rho) && p.lambda > 0.0 && p.beta > 0.0 &&
         p.rho >= 0.0;
}

bool pick_less(const MarketPick& a, const MarketPick& b) {
  return std::tie(a.years_ahead, a.pick) < std::tie(b.years_ahead, b.pick);
}

// Transformed coordinates: log lambda, log beta, logit(rho / rho_max).
WeibullParams from_coords(std::span<const double> c, bool discounted, double rho_max) {
  WeibullParams p{std::exp(c[0]), std::exp(c[1]), 0.0};
  if (discounted) p.rho = rho_max / (1.0 + std::exp(-c[2]));
  return p;
}

std::vector<double> to_coords(const WeibullParams& p, bool discounted, double rho_max) {
  std::vector<double> c{std::log(p.lambda), std::log(p.beta)};
  if (discounted) {
    const double q = std::clamp(p.rho / rho_max, 1e-6, 1.0 - 1e-6);
    c.push_back(std::log(q / (1.0 - q)));
  }
  return c;
}

MarketTrade prepared(const MarketTrade& t, bool discounted, FuturePickPolicy future) {
  MarketTrade out = t;
  if (!discounted && future == FuturePickPolicy::face_value) {
    for (auto& m : out.down) m.years_ahead = 0;
    for (auto& m : out.up) m.years_ahead = 0;
  }
  std::sort(out.down.begin(), out.down.end(), pick_less);
  std::sort(out.up.begin(), out.up.end(), pick_less);
  return out;
}

}  // namespace

double market_value(const WeibullParams& p, double pick, int years_ahead) {
  if (!(pick >= 1.0)) throw std::invalid_argument("market_value: pick must be >= 1");
  if (years_ahead < 0) throw std::invalid_argument("market_value: years_ahead must be >= 0");
  return std::exp(-weibull_exponent(p, pick)) * discount(p.rho, years_ahead);
}

double bundle_value(const WeibullParams& p, std::span<const BundlePick> bundle) {
  if (bundle.empty()) throw std::invalid_argument("bundle_value: bundle is empty");
  double v = 0.0;
  for (const auto& b : bundle) v += market_value(p, b.pick_number, b.years_ahead);
  return v;
}

PickCurve market_table(const WeibullParams& p) {
  PickCurve out{};
  for (int x = kMinPick; x <= kMaxPick; ++x) out[static_cast<std::size_t>(x - 1)] = market_value(p, x);
  return out;
}

ValueCurve market_curve(const WeibullParams& p) {
  ValueCurve c;
  c.kind = CurveKind::market;
  c.scope = Scope::all();
  c.anchor_pick = 1;
  c.anchor = "pick1";
  const PickCurve t = market_table(p);
  c.values.reserve(t.size());
  for (double v : t) c.values.push_back({v, v, v});
  return c;
}

std::string_view placement_name(ErrorPlacement m) {
  return m == ErrorPlacement::paper_form ? "paper-form" : "corrected-form";
}

std::optional<ErrorPlacement> parse_placement(std::string_view s) {
  if (s == "paper-form" || s == "paper_form") return ErrorPlacement::paper_form;
  if (s == "corrected-form" || s == "corrected_form") return ErrorPlacement::corrected_form;
  return std::nullopt;
}

std::string_view future_policy_name(FuturePickPolicy f) {
  return f == FuturePickPolicy::drop ? "drop" : "face-value";
}

std::optional<FuturePickPolicy> parse_future_policy(std::string_view s) {
  if (s == "drop") return FuturePickPolicy::drop;
  if (s == "face-value" || s == "face_value") return FuturePickPolicy::face_value;
  return std::nullopt;
}

std::string_view mae_weights_name(MaeWeights w) { return w == MaeWeights::uniform ? "uniform" : "round1"; }

std::optional<MaeWeights> parse_mae_weights(std::string_view s) {
  if (s == "uniform") return MaeWeights::uniform;
  if (s == "round1") return MaeWeights::round1;
  return std::nullopt;
}

MarketTrade to_market_trade(const TradeRecord& t) {
  MarketTrade m;
  for (const auto& b : t.down_bundle) m.down.push_back({static_cast<double>(b.pick_number), b.years_ahead});
  for (const auto& b : t.up_bundle) m.up.push_back({static_cast<double>(b.pick_number), b.years_ahead});
  std::sort(m.down.begin(), m.down.end(), pick_less);
  std::sort(m.up.begin(), m.up.end(), pick_less);
  return m;
}

double market_objective(std::span<const MarketTrade> trades, const WeibullParams& p, ErrorPlacement mode,
                        bool discounted) {
  if (!params_valid(p)) return std::numeric_limits<double>::infinity();
  double sum = 0.0;
  if (mode == ErrorPlacement::corrected_form) {
    for (const auto& t : trades) {
      const double r = corrected_residual(t, p, discounted);
      sum += r * r;
    }
    return sum;
  }
  double max_abs = 0.0;
  std::size_t infeasible = 0;
  for (const auto& t : trades) {
    const auto r = paper_residual(t, p, discounted);
    if (!r) {
      ++infeasible;
      continue;
    }
    sum += *r * *r;
    max_abs = std::max(max_abs, std::abs(*r));
  }
  const double penalty = 10.0 * std::max(max_abs, kPenaltyFloor);
  return sum + static_cast<double>(infeasible) * penalty * penalty;
}

std::optional<std::string> unusable_reason(const MarketTrade& t, const MarketFitOptions& options) {
  if (t.down.empty() || t.up.empty()) return "empty bundle";
  for (const auto* side : {&t.down, &t.up}) {
    for (const auto& m : *side) {
      if (!(m.pick >= 1.0) || m.years_ahead < 0) return "invalid pick";
    }
  }
  const MarketTrade p = prepared(t, options.discounted, options.future);
  if (!options.discounted && options.future == FuturePickPolicy::drop) {
    for (const auto* side : {&p.down, &p.up}) {
      for (const auto& m : *side) {
        if (m.years_ahead > 0) return "future pick";
      }
    }
  }
  // Dominated: each up pick is matched by an equal-or-better remaining down
  // pick of the same year, so the up bundle can never outweigh the rest of
  // the down bundle under any decreasing curve.
  std::vector<MarketPick> rest(p.down.begin() + 1, p.down.end());
  if (p.up.size() <= rest.size()) {
    std::vector<bool> taken(rest.size(), false);
    bool dominated = true;
    for (const auto& u : p.up) {
      bool matched = false;
      for (std::size_t j = 0; j < rest.size() && !matched; ++j) {
        if (!taken[j] && rest[j].years_ahead == u.years_ahead && rest[j].pick <= u.pick) {
          taken[j] = true;
          matched = true;
        }
      }
      if (!matched) {
        dominated = false;
        break;
      }
    }
    if (dominated) return "dominated";
  }
  return std::nullopt;
}

MarketFit fit_market(std::span<const MarketTrade> trades, const MarketFitOptions& options) {
  if (options.lambda_grid.empty() || options.beta_grid.empty() || (options.discounted && options.rho_grid.empty())) {
    throw std::invalid_argument("fit_market: empty initialization grid");
  }
  if (!(options.rho_max > 0.0)) throw std::invalid_argument("fit_market: rho_max must be positive");
  std::vector<MarketTrade> usable;
  std::size_t skipped = 0;
  for (const auto& t : trades) {
    if (unusable_reason(t, options)) {
      ++skipped;
      continue;
    }
    usable.push_back(prepared(t, options.discounted, options.future));
  }
  if (usable.size() < kMinUsableTrades) {
    throw std::invalid_argument("fit_market: need at least " + std::to_string(kMinUsableTrades) +
                                " usable trades, found " + std::to_string(usable.size()));
  }

  std::vector<WeibullParams> starts;
  const std::vector<double> rho_starts = options.discounted ? options.rho_grid : std::vector<double>{0.0};
  for (double l : options.lambda_grid) {
    for (double b : options.beta_grid) {
      for (double r : rho_starts) {
        if (!(l > 0.0) || !(b > 0.0) || r < 0.0 || r >= options.rho_max) {
          throw std::invalid_argument("fit_market: grid values out of range");
        }
        starts.push_back({l, b, r});
      }
    }
  }

  const bool disc = options.discounted;
  const double rho_max = options.rho_max;
  auto objective = [&](std::span<const double> c) {
    return market_objective(usable, from_coords(c, disc, rho_max), options.mode, disc);
  };

  struct Outcome {
    WeibullParams p;
    double value = std::numeric_limits<double>::infinity();
  };
  std::vector<Outcome> outcomes(starts.size());
  auto run = [&](std::size_t i) {
    NelderMeadOptions nm;
    nm.max_evaluations = 4000;
    const auto res = minimize_nelder_mead(objective, to_coords(starts[i], disc, rho_max), nm);
    outcomes[i] = {from_coords(res.x, disc, rho_max), res.value};
  };
  const std::size_t workers =
      std::min<std::size_t>(starts.size(), std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < starts.size(); ++i) run(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < starts.size(); i += workers) run(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  const Outcome* best = nullptr;
  for (const auto& o : outcomes) {
    if (!std::isfinite(o.value)) continue;
    if (!best || o.value < best->value ||
        (o.value == best->value &&
         std::tie(o.p.lambda, o.p.beta, o.p.rho) < std::tie(best->p.lambda, best->p.beta, best->p.rho))) {
      best = &o;
    }
  }
  if (!best) throw std::runtime_error("fit_market: no start produced a finite objective");

  MarketFit fit;
  fit.params = best->p;
  fit.objective = best->value;
  fit.used = usable.size();
  fit.skipped = skipped;
  fit.total = trades.size();
  fit.options = options;
  return fit;
}

MarketFit fit_market(std::span<const TradeRecord> trades, const MarketFitOptions& options) {
  std::vector<MarketTrade> m;
  m.reserve(trades.size());
  for (const auto& t : trades) m.push_back(to_market_trade(t));
  return fit_market(m, options);
}

std::string market_fit_json(const MarketFit& fit, const std::string& config_hash) {
  nlohmann::ordered_json j;
  j["lambda"] = fit.params.lambda;
  j["beta_w"] = fit.params.beta;
  j["rho"] = fit.params.rho;
  j["mode"] = std::string(placement_name(fit.options.mode));
  j["discounted"] = fit.options.discounted;
  j["future_picks"] = fit.options.discounted ? "discounted" : std::string(future_policy_name(fit.options.future));
  j["objective"] = fit.objective;
  j["trades_used"] = fit.used;
  j["trades_skipped"] = fit.skipped;
  j["trades_total"] = fit.total;
  j["grid"] = {{"lambda", fit.options.lambda_grid},
               {"beta_w", fit.options.beta_grid},
               {"rho", fit.options.discounted ? fit.options.rho_grid : std::vector<double>{}},
               {"rho_max", fit.options.rho_max}};
  j["config_hash"] = config_hash;
  return j.dump(2);
}

MarketFit market_fit_from_json(std::string_view text) {
  MarketFit f;
  try {
    const auto j = nlohmann::json::parse(text);
    f.params = {j.at("lambda").get<double>(), j.at("beta_w").get<double>(), j.at("rho").get<double>()};
    const auto mode = parse_placement(j.at("mode").get<std::string>());
    if (!mode) throw std::invalid_argument("market fit JSON: unknown mode");
    f.options.mode = *mode;
    f.options.discounted = j.at("discounted").get<bool>();
    if (!f.options.discounted) {
      const auto fut = parse_future_policy(j.at("future_picks").get<std::string>());
      if (!fut) throw std::invalid_argument("market fit JSON: unknown future pick policy");
      f.options.future = *fut;
    }
    f.objective = j.at("objective").get<double>();
    f.used = j.at("trades_used").get<std::size_t>();
    f.skipped = j.at("trades_skipped").get<std::size_t>();
    f.total = j.at("trades_total").get<std::size_t>();
    const auto& g = j.at("grid");
    f.options.lambda_grid = g.at("lambda").get<std::vector<double>>();
    f.options.beta_grid = g.at("beta_w").get<std::vector<double>>();
    if (f.options.discounted) f.options.rho_grid = g.at("rho").get<std::vector<double>>();
    f.options.rho_max = g.at("rho_max").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("market fit JSON: ") + e.what());
  }
  if (!params_valid(f.params)) throw std::invalid_argument("market fit JSON: invalid parameters");
  return f;
}

ThresholdMatch best_matching_threshold(const std::function<PickCurve(double)>& tail_curve, const PickCurve& market,
                                       std::span<const double> grid, MaeWeights weights) {
  if (grid.empty()) throw std::invalid_argument("best_matching_threshold: empty grid");
  std::vector<double> sorted(grid.begin(), grid.end());
  for (double r : sorted) {
    if (!std::isfinite(r) || r <= 0.0 || r >= 1.0) {
      throw std::invalid_argument("best_matching_threshold: thresholds must lie in (0, 1)");
    }
  }
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  const int last = weights == MaeWeights::round1 ? 32 : kMaxPick;

  ThresholdMatch out;
  bool have = false;
  for (double r : sorted) {
    const PickCurve c = tail_curve(r);
    double sum = 0.0;
    for (int x = 1; x <= last; ++x) {
      const auto i = static_cast<std::size_t>(x - 1);
      sum += std::abs(c[i] - market[i]);
    }
    const double mae = sum / last;
    out.table.emplace_back(r, mae);
    // Ascending order with strict comparison keeps the smaller r on ties.
    if (!have || mae < out.mae) {
      out.r_star = r;
      out.mae = mae;
      have = true;
    }
  }
  return out;
}

ThresholdMatch best_matching_threshold(const CurveEngine& engine, const WeibullParams& market,
                                       std::span<const double> grid, MaeWeights weights, Scope scope) {
  for (double r : grid) {
    if (r < engine.y_bust()) throw std::invalid_argument("best_matching_threshold: thresholds must be >= y_bust");
  }
  auto tail = [&](double r) {
    const ValueCurve c = engine.curve(CurveKind::tail, r, scope);
    PickCurve out{};
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c.values[i].mean;
    return out;
  };
  return best_matching_threshold(tail, market_table(market), grid, weights);
}

}  // namespace draftval
