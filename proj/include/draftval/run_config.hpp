#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "draftval/density_model.hpp"
#include "draftval/inference.hpp"
#include "draftval/trade_market.hpp"
#include "draftval/value_curves.hpp"

namespace draftval {

// A requested curve, written "kind[:r][@scope]", e.g. "tail:0.178@qb".
// The pseudo-kind "johnson" names the static chart (trade evaluation only).
struct CurveSpec {
  std::optional<CurveKind> kind;  // empty for "johnson"
  std::optional<double> r;
  std::optional<Scope> scope;

  bool is_johnson() const { return !kind.has_value(); }
};

// Throws std::invalid_argument on malformed text, an unknown kind, a
// threshold on a kind without one, or a missing threshold.
CurveSpec parse_curve_spec(std::string_view text);
std::string curve_spec_string(const CurveSpec& s);
// Comma-separated list.
std::vector<CurveSpec> parse_curve_specs(std::string_view text);

// File name for an emitted curve table, e.g. "curve_tail_r0.178_qb.csv".
std::string curve_file_name(CurveKind kind, std::optional<double> r, Scope scope);

struct RunConfig {
  std::string picks_path = "data/picks.csv";
  std::string trades_path = "data/trades.csv";
  std::string cost_path = "data/cost_table.csv";
  Variant variant = Variant::agnostic;
  ModelSettings settings;
  SamplerConfig sampler;
  std::vector<CurveSpec> curves;
  std::size_t curve_draws = 0;  // 0 uses every retained draw
  ErrorPlacement market_mode = ErrorPlacement::paper_form;
  bool market_discounted = false;
  FuturePickPolicy future_picks = FuturePickPolicy::drop;
  MaeWeights mae_weights = MaeWeights::uniform;
  double r_grid_min = 0.05;
  double r_grid_max = 0.35;
  double r_grid_step = 0.001;
  std::size_t threshold_draws = 200;
  std::string output_dir = "out";

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  std::vector<double> threshold_grid() const;
  std::string to_json() const;
  static RunConfig from_json(std::string_view text);
  // Hash of every field that can change numeric output (excludes the output
  // directory and thread count).
  std::string hash() const;
};

}  // namespace draftval
