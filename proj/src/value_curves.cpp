#include "draftval/value_curves.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <Eigen/Dense>
#include <boost/math/special_functions/beta.hpp>

#include "draftval/kernels.hpp"
#include "draftval/spline_basis.hpp"
#include "kernels/special_policy.hpp"

namespace draftval {

std::string_view curve_kind_name(CurveKind k) {
  switch (k) {
    case CurveKind::performance: return "performance";
    case CurveKind::surplus: return "surplus";
    case CurveKind::tail: return "tail";
    case CurveKind::surplus_tail: return "surplus_tail";
    case CurveKind::traditional: return "traditional";
    case CurveKind::market: return "market";
  }
  return "unknown";
}

std::optional<CurveKind> parse_curve_kind(std::string_view name) {
  for (CurveKind k : {CurveKind::performance, CurveKind::surplus, CurveKind::tail, CurveKind::surplus_tail,
                      CurveKind::traditional, CurveKind::market}) {
    if (curve_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

bool kind_needs_threshold(CurveKind k) { return k == CurveKind::tail || k == CurveKind::surplus_tail; }

std::string scope_name(Scope s) {
  switch (s.kind) {
    case Scope::Kind::all: return "all";
    case Scope::Kind::qb: return "qb";
    case Scope::Kind::not_qb: return "not_qb";
    case Scope::Kind::position: return std::string(position_label(s.position));
  }
  return "all";
}

std::optional<Scope> parse_scope(std::string_view name) {
  if (name == "all") return Scope::all();
  if (name == "qb" || name == "QB") return Scope::qb();
  if (name == "not_qb") return Scope::not_qb();
  if (auto p = parse_position(name)) return Scope::of(*p);
  return std::nullopt;
}

double beta_cdf(double y, double mu, double phi) {
  if (!(mu > 0.0 && mu < 1.0 && phi > 0.0)) throw std::domain_error("beta_cdf: need 0 < mu < 1 and phi > 0");
  if (y <= 0.0) return 0.0;
  if (y >= 1.0) return 1.0;
  return boost::math::ibeta(mu * phi, (1.0 - mu) * phi, y, detail::quiet_policy());
}

namespace {

double upper_beta(double a, double b, double y) {
  if (y <= 0.0) return 1.0;
  if (y >= 1.0) return 0.0;
  return boost::math::ibetac(a, b, y, detail::quiet_policy());
}

// Value of one functional for a single coefficient block at pick x.
double block_point(CurveKind kind, std::span<const double> c, double x, double r, double y_bust,
                   const PickCurve* cost) {
  const double eta_bp = c[0] + c[1] * x;
  const double bp = 1.0 / (1.0 + std::exp(-eta_bp));
  const BasisRow b = evaluate_basis(x);
  const double mu = 1.0 / (1.0 + std::exp(-(c[2] * b[0] + c[3] * b[1] + c[4] * b[2] + c[5] * b[3])));
  const double phi = std::exp(c[6] + c[7] * x);
  const double cost_x = cost != nullptr ? (*cost)[static_cast<std::size_t>(std::lround(x) - 1)] : 0.0;
  switch (kind) {
    case CurveKind::performance: return bp * y_bust / 2.0 + (1.0 - bp) * mu;
    case CurveKind::surplus: return bp * y_bust / 2.0 + (1.0 - bp) * mu - cost_x;
    case CurveKind::tail: return (1.0 - bp) * upper_beta(mu * phi, (1.0 - mu) * phi, r);
    case CurveKind::surplus_tail: {
      const double thr = r + cost_x;
      if (thr >= 1.0) return 0.0;
      if (thr < y_bust) throw std::domain_error("surplus tail threshold below the bust cutoff");
      return (1.0 - bp) * upper_beta(mu * phi, (1.0 - mu) * phi, thr);
    }
    default: throw std::invalid_argument("curve kind is not a posterior functional");
  }
}

std::vector<std::size_t> scope_blocks(Variant v, Scope scope) {
  if (v == Variant::agnostic) {
    if (scope.kind != Scope::Kind::all) {
      throw std::invalid_argument("scope '" + scope_name(scope) + "' needs the hierarchical model");
    }
    return {0};
  }
  switch (scope.kind) {
    case Scope::Kind::all: throw std::invalid_argument("scope 'all' needs the agnostic model");
    case Scope::Kind::qb: return {static_cast<std::size_t>(Position::QB) * kBlockDim};
    case Scope::Kind::position: return {static_cast<std::size_t>(scope.position) * kBlockDim};
    case Scope::Kind::not_qb: {
      std::vector<std::size_t> out;
      for (std::size_t p = 1; p < kNumPositions; ++p) out.push_back(p * kBlockDim);
      return out;
    }
  }
  return {};
}

void check_threshold(double r, double y_bust) {
  if (!(r >= y_bust)) throw std::domain_error("threshold r must be at least the bust cutoff");
}

double scoped_point(CurveKind kind, Variant v, std::span<const double> theta, double x, double r, double y_bust,
                    const PickCurve* cost, Scope scope) {
  if (theta.size() != param_dim(v)) throw std::invalid_argument("parameter vector has wrong dimension");
  if (!(x >= 1.0 && x <= 256.0)) throw std::domain_error("pick outside [1,256]");
  const auto blocks = scope_blocks(v, scope);
  double acc = 0.0;
  for (std::size_t off : blocks) acc += block_point(kind, theta.subspan(off, kBlockDim), x, r, y_bust, cost);
  return acc / static_cast<double>(blocks.size());
}

}  // namespace

double tail_probability(Variant v, std::span<const double> theta, double x, double r, double y_bust, Scope scope) {
  check_threshold(r, y_bust);
  return scoped_point(CurveKind::tail, v, theta, x, r, y_bust, nullptr, scope);
}

double expected_performance(Variant v, std::span<const double> theta, double x, double y_bust, Scope scope) {
  return scoped_point(CurveKind::performance, v, theta, x, 0.0, y_bust, nullptr, scope);
}

double expected_surplus(Variant v, std::span<const double> theta, double x, double y_bust, const PickCurve& cost,
                        Scope scope) {
  return scoped_point(CurveKind::surplus, v, theta, x, 0.0, y_bust, &cost, scope);
}

double surplus_tail_probability(Variant v, std::span<const double> theta, double x, double r, double y_bust,
                                const PickCurve& cost, Scope scope) {
  return scoped_point(CurveKind::surplus_tail, v, theta, x, r, y_bust, &cost, scope);
}

CurveEntry summarize(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("summarize: no values");
  CurveEntry e;
  double sum = 0.0;
  for (double v : values) sum += v;
  e.mean = sum / static_cast<double>(values.size());
  std::sort(values.begin(), values.end());
  auto quantile = [&](double p) {
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  e.lo95 = quantile(0.025);
  e.hi95 = quantile(0.975);
  // Widen the band to contain the mean when extreme skew pushes it outside.
  e.lo95 = std::min(e.lo95, e.mean);
  e.hi95 = std::max(e.hi95, e.mean);
  return e;
}

std::vector<CurveEntry> normalize_draws(const std::vector<double>& draws, std::span<const double> anchors) {
  const std::size_t n = anchors.size();
  if (n == 0 || draws.size() % n != 0) throw std::invalid_argument("normalize: draw/anchor size mismatch");
  const std::size_t width = draws.size() / n;
  double anchor_mean = 0.0;
  for (double a : anchors) anchor_mean += a;
  anchor_mean /= static_cast<double>(n);
  if (!(std::fabs(anchor_mean) >= 1e-9)) throw std::domain_error("normalization anchor has near-zero posterior mass");
  std::vector<CurveEntry> out(width);
  std::vector<double> column(n);
  for (std::size_t x = 0; x < width; ++x) {
    for (std::size_t d = 0; d < n; ++d) column[d] = draws[d * width + x] / anchors[d];
    out[x] = summarize(column);
  }
  return out;
}

CurveEngine::CurveEngine(const PosteriorSamples& samples, std::size_t max_draws) : samples_(samples) {
  const std::size_t total = samples.num_draws();
  if (total == 0) throw std::invalid_argument("posterior has no draws");
  const std::size_t keep = (max_draws == 0 || max_draws >= total) ? total : max_draws;
  draw_index_.resize(keep);
  for (std::size_t i = 0; i < keep; ++i) draw_index_[i] = i * total / keep;
}

void CurveEngine::check(CurveKind kind, std::optional<double> r, Scope scope) const {
  if (kind == CurveKind::traditional || kind == CurveKind::market) {
    throw std::invalid_argument("curve kind '" + std::string(curve_kind_name(kind)) + "' is not a posterior curve");
  }
  if (kind_needs_threshold(kind)) {
    if (!r) throw std::invalid_argument("curve kind '" + std::string(curve_kind_name(kind)) + "' needs a threshold r");
    check_threshold(*r, y_bust());
  }
  if ((kind == CurveKind::surplus || kind == CurveKind::surplus_tail) && !cost_) {
    throw std::invalid_argument("surplus curves need a cost table");
  }
  scope_blocks(samples_.variant, scope);
}

void CurveEngine::block_curve(CurveKind kind, double r, std::span<const double> theta, std::size_t block,
                              double* out) const {
  static const auto grid = [] {
    struct G {
      std::vector<double> x, b0, b1, b2, b3;
    } g;
    const auto& basis = basis_table();
    for (std::size_t i = 0; i < kNumPicks; ++i) {
      g.x.push_back(static_cast<double>(i + 1));
      g.b0.push_back(basis[i][0]);
      g.b1.push_back(basis[i][1]);
      g.b2.push_back(basis[i][2]);
      g.b3.push_back(basis[i][3]);
    }
    return g;
  }();
  const double* basis[4] = {grid.b0.data(), grid.b1.data(), grid.b2.data(), grid.b3.data()};
  double bp[kNumPicks], mu[kNumPicks], phi[kNumPicks];
  kernels::active_kernels().links(theta.data() + block, grid.x.data(), basis, kNumPicks, bp, mu, phi);
  const double yb = y_bust();
  for (std::size_t i = 0; i < kNumPicks; ++i) {
    double v = 0.0;
    switch (kind) {
      case CurveKind::performance: v = bp[i] * yb / 2.0 + (1.0 - bp[i]) * mu[i]; break;
      case CurveKind::surplus: v = bp[i] * yb / 2.0 + (1.0 - bp[i]) * mu[i] - (*cost_)[i]; break;
      case CurveKind::tail: v = (1.0 - bp[i]) * upper_beta(mu[i] * phi[i], (1.0 - mu[i]) * phi[i], r); break;
      case CurveKind::surplus_tail: {
        const double thr = r + (*cost_)[i];
        if (thr >= 1.0) {
          v = 0.0;
        } else {
          if (thr < yb) throw std::domain_error("surplus tail threshold below the bust cutoff");
          v = (1.0 - bp[i]) * upper_beta(mu[i] * phi[i], (1.0 - mu[i]) * phi[i], thr);
        }
        break;
      }
      default: throw std::invalid_argument("curve kind is not a posterior functional");
    }
    out[i] += v;
  }
}

std::vector<double> CurveEngine::functional(CurveKind kind, std::optional<double> r, Scope scope) const {
  check(kind, r, scope);
  const auto blocks = scope_blocks(samples_.variant, scope);
  const double rr = r.value_or(0.0);
  std::vector<double> out(num_draws() * kNumPicks, 0.0);
  const double scale = 1.0 / static_cast<double>(blocks.size());
  for (std::size_t d = 0; d < num_draws(); ++d) {
    double* row = out.data() + d * kNumPicks;
    const auto theta = samples_.draw(draw_index_[d]);
    for (std::size_t off : blocks) block_curve(kind, rr, theta, off, row);
    if (blocks.size() > 1) {
      for (std::size_t i = 0; i < kNumPicks; ++i) row[i] *= scale;
    }
  }
  return out;
}

std::vector<double> CurveEngine::anchor_values(CurveKind kind, std::optional<double> r, Scope scope) const {
  check(kind, r, scope);
  const Scope anchor_scope = scope.kind == Scope::Kind::all ? Scope::all() : Scope::qb();
  const std::size_t off = scope_blocks(samples_.variant, anchor_scope).front();
  const PickCurve* cost = cost_ ? &*cost_ : nullptr;
  std::vector<double> out(num_draws());
  for (std::size_t d = 0; d < num_draws(); ++d) {
    const auto theta = samples_.draw(draw_index_[d]);
    out[d] = block_point(kind, theta.subspan(off, kBlockDim), 1.0, r.value_or(0.0), y_bust(), cost);
  }
  return out;
}

ValueCurve CurveEngine::curve(CurveKind kind, std::optional<double> r, Scope scope) const {
  ValueCurve c;
  c.kind = kind;
  c.r = kind_needs_threshold(kind) ? r : std::nullopt;
  c.scope = scope;
  c.anchor_pick = 1;
  c.anchor = scope.kind == Scope::Kind::all ? "pick1" : "qb_pick1";
  const auto draws = functional(kind, c.r, scope);
  const auto anchors = anchor_values(kind, c.r, scope);
  c.values = normalize_draws(draws, anchors);
  return c;
}

ValueCurve traditional_mean_curve(const std::vector<PickRecord>& picks) {
  if (picks.empty()) throw std::invalid_argument("traditional curve: no picks");
  const auto n = static_cast<Eigen::Index>(picks.size());
  Eigen::MatrixXd design(n, 4);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = picks[static_cast<std::size_t>(i)];
    const BasisRow b = evaluate_basis(p.draft_position);
    for (int k = 0; k < 4; ++k) design(i, k) = b[static_cast<std::size_t>(k)];
    y(i) = p.outcome_y;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < 4) throw std::invalid_argument("traditional curve: spline design is rank deficient");
  const Eigen::VectorXd coef = qr.solve(y);
  const auto& basis = basis_table();
  std::vector<double> fitted(kNumPicks);
  for (std::size_t i = 0; i < kNumPicks; ++i) {
    fitted[i] = 0.0;
    for (int k = 0; k < 4; ++k) fitted[i] += coef(k) * basis[i][static_cast<std::size_t>(k)];
  }
  if (!(std::fabs(fitted[0]) >= 1e-12)) throw std::domain_error("traditional curve: zero value at pick 1");
  ValueCurve c;
  c.kind = CurveKind::traditional;
  c.scope = Scope::all();
  c.anchor = "pick1";
  c.values.resize(kNumPicks);
  for (std::size_t i = 0; i < kNumPicks; ++i) {
    const double v = fitted[i] / fitted[0];
    c.values[i] = {v, v, v};
  }
  return c;
}

std::string curve_csv(const ValueCurve& curve, const CurveMeta& meta) {
  std::string out = "# kind=" + std::string(curve_kind_name(curve.kind));
  char buf[96];
  if (curve.r) {
    std::snprintf(buf, sizeof buf, " r=%.6g", *curve.r);
    out += buf;
  }
  out += " scope=" + scope_name(curve.scope) + " anchor=" + curve.anchor + " model_hash=" + meta.model_hash +
         " config_hash=" + meta.config_hash + "\n";
  out += "pick,mean,lo95,hi95\n";
  for (std::size_t i = 0; i < curve.values.size(); ++i) {
    const auto& e = curve.values[i];
    std::snprintf(buf, sizeof buf, "%zu,%.12g,%.12g,%.12g\n", i + 1, e.mean, e.lo95, e.hi95);
    out += buf;
  }
  return out;
}

}  // namespace draftval
