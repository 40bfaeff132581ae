#include "draftval/density_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/beta.hpp>

#include "draftval/hash.hpp"
#include "draftval/kernels.hpp"
#include "draftval/spline_basis.hpp"
#include "json.hpp"
#include "kernels/special_policy.hpp"

namespace draftval {

namespace {

constexpr std::array<const char*, kBlockDim> kCoefNames = {"alpha0", "alpha1", "beta1",  "beta2",
                                                           "beta3",  "beta4",  "gamma0", "gamma1"};

const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double normal_logpdf(double v, double mean, double sd) {
  const double z = (v - mean) / sd;
  return -0.5 * z * z - std::log(sd) - kLogSqrt2Pi;
}

double half_normal_logpdf(double v) { return std::numbers::ln2 - 0.5 * v * v - kLogSqrt2Pi; }

double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

}  // namespace

std::string_view variant_name(Variant v) { return v == Variant::agnostic ? "agnostic" : "hierarchical"; }

std::optional<Variant> parse_variant(std::string_view name) {
  if (name == "agnostic") return Variant::agnostic;
  if (name == "hierarchical") return Variant::hierarchical;
  return std::nullopt;
}

std::size_t param_dim(Variant v) { return v == Variant::agnostic ? kAgnosticDim : kHierDim; }

std::vector<std::string> param_names(Variant v) {
  std::vector<std::string> names;
  if (v == Variant::agnostic) {
    for (const char* n : kCoefNames) names.emplace_back(n);
    return names;
  }
  for (auto label : kPositionLabels) {
    for (const char* n : kCoefNames) names.push_back(std::string(n) + "[" + std::string(label) + "]");
  }
  for (const char* n : kCoefNames) names.push_back(std::string("pop_") + n);
  for (const char* n : kCoefNames) names.push_back(std::string("tau_") + n);
  return names;
}

std::size_t block_offset(Variant v, std::optional<Position> pos) {
  if (v == Variant::agnostic) return 0;
  if (!pos) throw std::invalid_argument("hierarchical parameters require a position group");
  return static_cast<std::size_t>(*pos) * kBlockDim;
}

namespace {
std::span<const double> block(Variant v, std::span<const double> theta, std::optional<Position> pos) {
  if (theta.size() != param_dim(v)) throw std::invalid_argument("parameter vector has wrong dimension");
  return theta.subspan(block_offset(v, pos), kBlockDim);
}
}  // namespace

double bust_prob(Variant v, std::span<const double> theta, double x, std::optional<Position> pos) {
  auto c = block(v, theta, pos);
  return logistic(c[0] + c[1] * x);
}

double mean_mu(Variant v, std::span<const double> theta, double x, std::optional<Position> pos) {
  auto c = block(v, theta, pos);
  const BasisRow b = evaluate_basis(x);
  return logistic(c[2] * b[0] + c[3] * b[1] + c[4] * b[2] + c[5] * b[3]);
}

double precision_phi(Variant v, std::span<const double> theta, double x, std::optional<Position> pos) {
  auto c = block(v, theta, pos);
  return std::exp(c[6] + c[7] * x);
}

namespace {

nlohmann::json block_json(std::span<const double> c) {
  return nlohmann::json{{"alpha", {c[0], c[1]}}, {"beta", {c[2], c[3], c[4], c[5]}}, {"gamma", {c[6], c[7]}}};
}

void read_block(const nlohmann::json& j, double* out) {
  const auto& a = j.at("alpha");
  const auto& b = j.at("beta");
  const auto& g = j.at("gamma");
  if (a.size() != 2 || b.size() != 4 || g.size() != 2) throw std::invalid_argument("parameter block has wrong shape");
  out[0] = a[0].get<double>();
  out[1] = a[1].get<double>();
  for (int k = 0; k < 4; ++k) out[2 + k] = b[k].get<double>();
  out[6] = g[0].get<double>();
  out[7] = g[1].get<double>();
}

}  // namespace

std::string params_to_json(Variant v, std::span<const double> theta) {
  if (theta.size() != param_dim(v)) throw std::invalid_argument("parameter vector has wrong dimension");
  nlohmann::json j;
  j["variant"] = std::string(variant_name(v));
  if (v == Variant::agnostic) {
    auto b = block_json(theta);
    for (auto& [k, val] : b.items()) j[k] = val;
    return j.dump();
  }
  nlohmann::json positions = nlohmann::json::array();
  for (std::size_t p = 0; p < kNumPositions; ++p) {
    auto b = block_json(theta.subspan(p * kBlockDim, kBlockDim));
    b["position"] = std::string(kPositionLabels[p]);
    positions.push_back(b);
  }
  j["positions"] = positions;
  j["population"] = block_json(theta.subspan(kHierPopOffset, kBlockDim));
  j["tau"] = block_json(theta.subspan(kHierTauOffset, kBlockDim));
  return j.dump();
}

std::vector<double> params_from_json(std::string_view text, Variant expected) {
  const auto j = nlohmann::json::parse(text);
  const auto v = parse_variant(j.at("variant").get<std::string>());
  if (!v || *v != expected) {
    throw std::invalid_argument("parameter document is for variant '" + j.at("variant").get<std::string>() +
                                "', expected '" + std::string(variant_name(expected)) + "'");
  }
  std::vector<double> theta(param_dim(expected));
  if (expected == Variant::agnostic) {
    read_block(j, theta.data());
    return theta;
  }
  const auto& positions = j.at("positions");
  if (positions.size() != kNumPositions) throw std::invalid_argument("expected 11 position blocks");
  for (const auto& entry : positions) {
    auto pos = parse_position(entry.at("position").get<std::string>());
    if (!pos) throw std::invalid_argument("unknown position in parameter document");
    read_block(entry, theta.data() + static_cast<std::size_t>(*pos) * kBlockDim);
  }
  read_block(j.at("population"), theta.data() + kHierPopOffset);
  read_block(j.at("tau"), theta.data() + kHierTauOffset);
  return theta;
}

DensityModel::DensityModel(Variant variant, const std::vector<PickRecord>& picks, ModelSettings settings)
    : variant_(variant), settings_(settings) {
  if (!(settings.y_bust > 0.0 && settings.y_bust < 1.0)) throw std::invalid_argument("y_bust must lie in (0,1)");

  struct Cell {
    double n_bust = 0.0, n_tail = 0.0, s1 = 0.0, s2 = 0.0;
  };
  const std::size_t n_groups = variant == Variant::agnostic ? 1 : kNumPositions;
  std::vector<std::map<int, Cell>> cells(n_groups);
  Fnv1a hash;
  for (const auto& p : picks) {
    if (p.draft_position < kMinPick || p.draft_position > kMaxPick) {
      throw std::invalid_argument("pick outside [1,256] reached the density model");
    }
    hash.update_value(p.draft_year).update_value(p.draft_position);
    hash.update_value(static_cast<int>(p.position_group)).update_value(p.outcome_y);
    const std::size_t g = variant == Variant::agnostic ? 0 : static_cast<std::size_t>(p.position_group);
    Cell& c = cells[g][p.draft_position];
    if (p.outcome_y <= settings.y_bust) {
      c.n_bust += 1.0;
      ++n_bust_total_;
    } else {
      const double y = std::clamp(p.outcome_y, kBetaClampLo, kBetaClampHi);
      c.n_tail += 1.0;
      c.s1 += std::log(y);
      c.s2 += std::log1p(-y);
    }
    ++n_obs_;
  }
  hash.update_value(settings.y_bust).update_value(settings.normalize_tail);
  data_hash_ = hash.digest();

  const auto& basis = basis_table();
  for (const auto& group : cells) {
    Group g;
    g.offset = x_.size();
    auto push = [&](int x, const Cell& c) {
      const BasisRow& b = basis[static_cast<std::size_t>(x - 1)];
      x_.push_back(x);
      b0_.push_back(b[0]);
      b1_.push_back(b[1]);
      b2_.push_back(b[2]);
      b3_.push_back(b[3]);
      n_bust_.push_back(c.n_bust);
      n_tail_.push_back(c.n_tail);
      s1_.push_back(c.s1);
      s2_.push_back(c.s2);
    };
    for (const auto& [x, c] : group) push(x, c);
    while ((x_.size() - g.offset) % 4 != 0) push(1, Cell{});
    g.size = x_.size() - g.offset;
    groups_.push_back(g);
  }
}

double DensityModel::block_loglik(std::size_t group, const double* coef, double* grad) const {
  const Group& g = groups_[group];
  if (g.size == 0) return 0.0;
  kernels::CellBlock cb;
  cb.x = x_.data() + g.offset;
  cb.basis[0] = b0_.data() + g.offset;
  cb.basis[1] = b1_.data() + g.offset;
  cb.basis[2] = b2_.data() + g.offset;
  cb.basis[3] = b3_.data() + g.offset;
  cb.n_bust = n_bust_.data() + g.offset;
  cb.n_tail = n_tail_.data() + g.offset;
  cb.sum_log_y = s1_.data() + g.offset;
  cb.sum_log1m_y = s2_.data() + g.offset;
  cb.size = g.size;
  double ll = kernels::active_kernels().cell_loglik(cb, coef, grad);
  if (settings_.normalize_tail) ll += tail_norm_term(group, coef, grad);
  return ll;
}

// Truncated-Beta variant: each tail observation is divided by the Beta mass
// above y_bust. The derivative of log(1 - I_ybust(a, b)) in the shapes comes
// from central differences.
double DensityModel::tail_norm_term(std::size_t group, const double* coef, double* grad) const {
  const Group& g = groups_[group];
  const double yb = settings_.y_bust;
  auto log_mass = [yb](double a, double b) {
    return std::log(boost::math::ibetac(a, b, yb, detail::quiet_policy()));
  };
  double total = 0.0;
  for (std::size_t i = g.offset; i < g.offset + g.size; ++i) {
    const double nt = n_tail_[i];
    if (nt == 0.0) continue;
    const double eta_mu = coef[2] * b0_[i] + coef[3] * b1_[i] + coef[4] * b2_[i] + coef[5] * b3_[i];
    const double mu = logistic(eta_mu);
    const double phi = std::exp(coef[6] + coef[7] * x_[i]);
    const double a = mu * phi, b = (1.0 - mu) * phi;
    total -= nt * log_mass(a, b);
    if (grad != nullptr) {
      const double ha = 1e-6 * a, hb = 1e-6 * b;
      const double da = (log_mass(a + ha, b) - log_mass(a - ha, b)) / (2.0 * ha);
      const double db = (log_mass(a, b + hb) - log_mass(a, b - hb)) / (2.0 * hb);
      const double g_mu = -nt * phi * (da - db) * mu * (1.0 - mu);
      const double g_phi = -nt * (da * a + db * b);
      grad[2] += g_mu * b0_[i];
      grad[3] += g_mu * b1_[i];
      grad[4] += g_mu * b2_[i];
      grad[5] += g_mu * b3_[i];
      grad[6] += g_phi;
      grad[7] += g_phi * x_[i];
    }
  }
  return total;
}

double DensityModel::log_likelihood(std::span<const double> theta, std::span<double> grad) const {
  if (theta.size() != dim()) throw std::invalid_argument("parameter vector has wrong dimension");
  const bool want_grad = !grad.empty();
  if (want_grad) {
    if (grad.size() != dim()) throw std::invalid_argument("gradient buffer has wrong dimension");
    std::fill(grad.begin(), grad.end(), 0.0);
  }
  double ll = static_cast<double>(n_bust_total_) * -std::log(settings_.y_bust);
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    const std::size_t off = g * kBlockDim;
    ll += block_loglik(g, theta.data() + off, want_grad ? grad.data() + off : nullptr);
  }
  return ll;
}

DensityModel DensityModel::position_model(Position pos) const {
  if (variant_ != Variant::hierarchical) throw std::invalid_argument("position_model needs a hierarchical model");
  DensityModel out(Variant::agnostic, settings_);
  const Group& g = groups_[static_cast<std::size_t>(pos)];
  auto slice = [&](const std::vector<double>& v, std::vector<double>& dst) {
    dst.assign(v.begin() + static_cast<std::ptrdiff_t>(g.offset),
               v.begin() + static_cast<std::ptrdiff_t>(g.offset + g.size));
  };
  slice(x_, out.x_);
  slice(b0_, out.b0_);
  slice(b1_, out.b1_);
  slice(b2_, out.b2_);
  slice(b3_, out.b3_);
  slice(n_bust_, out.n_bust_);
  slice(n_tail_, out.n_tail_);
  slice(s1_, out.s1_);
  slice(s2_, out.s2_);
  out.groups_.push_back(Group{0, g.size});
  double busts = 0.0, tails = 0.0;
  for (std::size_t i = 0; i < g.size; ++i) {
    busts += out.n_bust_[i];
    tails += out.n_tail_[i];
  }
  out.n_bust_total_ = static_cast<std::size_t>(busts);
  out.n_obs_ = static_cast<std::size_t>(busts + tails);
  Fnv1a hash;
  hash.update_value(data_hash_).update_value(static_cast<int>(pos));
  out.data_hash_ = hash.digest();
  return out;
}

bool DensityModel::in_support(std::span<const double> theta) const {
  if (theta.size() != dim()) return false;
  for (double v : theta) {
    if (!std::isfinite(v)) return false;
  }
  if (variant_ == Variant::hierarchical) {
    for (std::size_t k = 0; k < kBlockDim; ++k) {
      if (!(theta[kHierTauOffset + k] > 0.0)) return false;
    }
  }
  return true;
}

double DensityModel::log_prior(std::span<const double> theta, std::span<double> grad) const {
  if (theta.size() != dim()) throw std::invalid_argument("parameter vector has wrong dimension");
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
  double lp = 0.0;
  if (variant_ == Variant::agnostic) {
    for (std::size_t k = 0; k < kAgnosticDim; ++k) {
      lp += normal_logpdf(theta[k], 0.0, kPriorSd);
      if (want_grad) grad[k] = -theta[k] / (kPriorSd * kPriorSd);
    }
    return lp;
  }
  for (std::size_t k = 0; k < kBlockDim; ++k) {
    if (!(theta[kHierTauOffset + k] > 0.0)) return -std::numeric_limits<double>::infinity();
  }
  for (std::size_t k = 0; k < kBlockDim; ++k) {
    const double m = theta[kHierPopOffset + k];
    const double tau = theta[kHierTauOffset + k];
    lp += normal_logpdf(m, 0.0, kPriorSd) + half_normal_logpdf(tau);
    double g_m = -m / (kPriorSd * kPriorSd);
    double g_tau = -tau;
    for (std::size_t p = 0; p < kNumPositions; ++p) {
      const double v = theta[p * kBlockDim + k];
      const double r = (v - m) / tau;
      lp += normal_logpdf(v, m, tau);
      if (want_grad) {
        grad[p * kBlockDim + k] = -r / tau;
        g_m += r / tau;
        g_tau += (r * r - 1.0) / tau;
      }
    }
    if (want_grad) {
      grad[kHierPopOffset + k] = g_m;
      grad[kHierTauOffset + k] = g_tau;
    }
  }
  return lp;
}

double DensityModel::log_posterior(std::span<const double> theta, std::span<double> grad) const {
  if (grad.empty()) {
    const double lp = log_prior(theta);
    if (!std::isfinite(lp)) return lp;
    return lp + log_likelihood(theta);
  }
  std::vector<double> g_prior(dim());
  const double lp = log_prior(theta, g_prior);
  if (!std::isfinite(lp)) {
    std::fill(grad.begin(), grad.end(), 0.0);
    return lp;
  }
  const double ll = log_likelihood(theta, grad);
  for (std::size_t k = 0; k < dim(); ++k) grad[k] += g_prior[k];
  return lp + ll;
}

void DensityModel::to_unconstrained(std::span<const double> theta, std::span<double> u) const {
  if (theta.size() != dim() || u.size() != dim()) throw std::invalid_argument("dimension mismatch");
  if (variant_ == Variant::agnostic) {
    std::copy(theta.begin(), theta.end(), u.begin());
    return;
  }
  for (std::size_t k = 0; k < kBlockDim; ++k) {
    const double m = theta[kHierPopOffset + k];
    const double tau = theta[kHierTauOffset + k];
    if (!(tau > 0.0)) throw std::domain_error("tau must be positive");
    for (std::size_t p = 0; p < kNumPositions; ++p) {
      const double v = theta[p * kBlockDim + k];
      u[p * kBlockDim + k] = centring_[k] ? v : (v - m) / tau;
    }
    u[kHierPopOffset + k] = m;
    u[kHierTauOffset + k] = std::log(tau);
  }
}

void DensityModel::from_unconstrained(std::span<const double> u, std::span<double> theta) const {
  if (theta.size() != dim() || u.size() != dim()) throw std::invalid_argument("dimension mismatch");
  if (variant_ == Variant::agnostic) {
    std::copy(u.begin(), u.end(), theta.begin());
    return;
  }
  for (std::size_t k = 0; k < kBlockDim; ++k) {
    const double m = u[kHierPopOffset + k];
    const double tau = std::exp(u[kHierTauOffset + k]);
    for (std::size_t p = 0; p < kNumPositions; ++p) {
      const double v = u[p * kBlockDim + k];
      theta[p * kBlockDim + k] = centring_[k] ? v : m + tau * v;
    }
    theta[kHierPopOffset + k] = m;
    theta[kHierTauOffset + k] = tau;
  }
}

double DensityModel::log_density_unconstrained(std::span<const double> u, std::span<double> grad) const {
  if (variant_ == Variant::agnostic) return log_posterior(u, grad);
  if (u.size() != dim()) throw std::invalid_argument("parameter vector has wrong dimension");
  std::vector<double> theta(dim());
  from_unconstrained(u, theta);
  const bool want_grad = !grad.empty();
  std::vector<double> g_ll;
  if (want_grad) g_ll.resize(dim());
  double lp = log_likelihood(theta, want_grad ? std::span<double>(g_ll) : std::span<double>());
  for (std::size_t k = 0; k < kBlockDim; ++k) {
    const double m = u[kHierPopOffset + k];
    const double log_tau = u[kHierTauOffset + k];
    const double tau = theta[kHierTauOffset + k];
    lp += normal_logpdf(m, 0.0, kPriorSd) + half_normal_logpdf(tau) + log_tau;
    double g_m = -m / (kPriorSd * kPriorSd);
    double g_log_tau = 1.0 - tau * tau;
    for (std::size_t p = 0; p < kNumPositions; ++p) {
      const double gl = want_grad ? g_ll[p * kBlockDim + k] : 0.0;
      if (centring_[k]) {
        const double z = (u[p * kBlockDim + k] - m) / tau;
        lp += normal_logpdf(z, 0.0, 1.0) - log_tau;
        if (want_grad) {
          grad[p * kBlockDim + k] = gl - z / tau;
          g_m += z / tau;
          g_log_tau += z * z - 1.0;
        }
      } else {
        const double z = u[p * kBlockDim + k];
        lp += normal_logpdf(z, 0.0, 1.0);
        if (want_grad) {
          grad[p * kBlockDim + k] = tau * gl - z;
          g_m += gl;
          g_log_tau += tau * gl * z;
        }
      }
    }
    if (want_grad) {
      grad[kHierPopOffset + k] = g_m;
      grad[kHierTauOffset + k] = g_log_tau;
    }
  }
  return lp;
}

}  // namespace draftval
