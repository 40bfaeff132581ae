#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "draftval/density_model.hpp"
#include "draftval/inference.hpp"
#include "draftval/types.hpp"

namespace draftval {

enum class CurveKind { performance, surplus, tail, surplus_tail, traditional, market };

std::string_view curve_kind_name(CurveKind k);
std::optional<CurveKind> parse_curve_kind(std::string_view name);
bool kind_needs_threshold(CurveKind k);

// Which position curves a value refers to: all positions pooled (agnostic
// model), QB, the per-draw mean of the 10 non-QB curves, or one position.
struct Scope {
  enum class Kind { all, qb, not_qb, position };
  Kind kind = Kind::all;
  Position position = Position::QB;

  static Scope all() { return {}; }
  static Scope qb() { return {Kind::qb, Position::QB}; }
  static Scope not_qb() { return {Kind::not_qb, Position::QB}; }
  static Scope of(Position p) { return p == Position::QB ? qb() : Scope{Kind::position, p}; }
  friend bool operator==(const Scope&, const Scope&) = default;
};

std::string scope_name(Scope s);
// Accepts "all", "qb", "not_qb" or a position label.
std::optional<Scope> parse_scope(std::string_view name);

// CDF of Beta(mu*phi, (1-mu)*phi) at y.
double beta_cdf(double y, double mu, double phi);

// Single-draw functionals. The agnostic model supports only Scope::all; the
// hierarchical model supports every other scope.
double tail_probability(Variant v, std::span<const double> theta, double x, double r, double y_bust, Scope scope);
double expected_performance(Variant v, std::span<const double> theta, double x, double y_bust, Scope scope);
double expected_surplus(Variant v, std::span<const double> theta, double x, double y_bust, const PickCurve& cost,
                        Scope scope);
double surplus_tail_probability(Variant v, std::span<const double> theta, double x, double r, double y_bust,
                                const PickCurve& cost, Scope scope);

struct CurveEntry {
  double mean = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;
};

// Mean and 2.5% / 97.5% quantiles (linear interpolation between order
// statistics).
CurveEntry summarize(std::vector<double> values);

struct ValueCurve {
  CurveKind kind = CurveKind::performance;
  std::optional<double> r;
  Scope scope;
  int anchor_pick = 1;
  std::string anchor;  // "pick1" or "qb_pick1"
  std::vector<CurveEntry> values;  // picks 1..256

  const CurveEntry& at(int pick) const { return values.at(static_cast<std::size_t>(pick - 1)); }
};

// Divides every draw row (256 values) by that draw's anchor value and
// summarizes per pick. Throws std::domain_error when |mean anchor| < 1e-9.
std::vector<CurveEntry> normalize_draws(const std::vector<double>& draws, std::span<const double> anchors);

// Posterior curves. Draws are thinned evenly to at most max_draws (0 keeps
// every draw).
class CurveEngine {
 public:
  explicit CurveEngine(const PosteriorSamples& samples, std::size_t max_draws = 0);

  void set_cost_curve(const PickCurve& cost) { cost_ = cost; }
  bool has_cost_curve() const { return cost_.has_value(); }
  const PosteriorSamples& samples() const { return samples_; }
  std::size_t num_draws() const { return draw_index_.size(); }
  Variant variant() const { return samples_.variant; }
  double y_bust() const { return samples_.settings.y_bust; }

  // Raw functional per draw, row-major num_draws() x 256.
  std::vector<double> functional(CurveKind kind, std::optional<double> r, Scope scope) const;
  // Per-draw value at the anchor for this scope: pick 1 for Scope::all,
  // the QB curve at pick 1 otherwise.
  std::vector<double> anchor_values(CurveKind kind, std::optional<double> r, Scope scope) const;

  ValueCurve curve(CurveKind kind, std::optional<double> r, Scope scope) const;

 private:
  void check(CurveKind kind, std::optional<double> r, Scope scope) const;
  void block_curve(CurveKind kind, double r, std::span<const double> theta, std::size_t block, double* out) const;

  const PosteriorSamples& samples_;
  std::vector<std::size_t> draw_index_;
  std::optional<PickCurve> cost_;
};

// Least-squares regression of Y on the spline basis, normalized at pick 1.
// Throws std::invalid_argument for empty data or a rank-deficient design.
ValueCurve traditional_mean_curve(const std::vector<PickRecord>& picks);

struct CurveMeta {
  std::string model_hash;
  std::string config_hash;
};

// "# kind=... r=... scope=... anchor=... model_hash=... config_hash=..."
// followed by "pick,mean,lo95,hi95" and 256 rows.
std::string curve_csv(const ValueCurve& curve, const CurveMeta& meta);

}  // namespace draftval
