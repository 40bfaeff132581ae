#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "draftval/density_model.hpp"
#include "draftval/types.hpp"

namespace draftval::testing {

// Known agnostic coefficients with Beta mass below the bust cutoff
// negligible everywhere on [1, 256].
inline const std::vector<double> kTruthAgnostic = {-0.8, 0.008, -1.5, -2.0, -2.4, -2.6, 3.0, 0.004};

// Cox-de Boor recursion for the cubic B-spline basis on [1, 256] with
// clamped boundary knots and no interior knots.
inline std::array<double, 4> de_boor_basis(double x) {
  const double knots[8] = {1, 1, 1, 1, 256, 256, 256, 256};
  constexpr int order = 4;
  double n[7] = {};
  for (int i = 0; i < 7; ++i) {
    const bool last_span = knots[i + 1] == 256.0 && knots[i] < 256.0;
    n[i] = (knots[i] <= x && (x < knots[i + 1] || (last_span && x == 256.0))) ? 1.0 : 0.0;
  }
  for (int k = 2; k <= order; ++k) {
    for (int i = 0; i < 8 - k; ++i) {
      double left = 0.0, right = 0.0;
      const double d1 = knots[i + k - 1] - knots[i];
      const double d2 = knots[i + k] - knots[i + 1];
      if (d1 > 0.0) left = (x - knots[i]) / d1 * n[i];
      if (d2 > 0.0) right = (knots[i + k] - x) / d2 * n[i + 1];
      n[i] = left + right;
    }
  }
  return {n[0], n[1], n[2], n[3]};
}

// Beta(mu*phi, (1-mu)*phi) CDF by tanh-sinh quadrature over the shorter
// side of y. Substituting s = t^a (or (1-t)^b on the upper side) removes the
// endpoint singularity of the density when a shape is below one.
inline double beta_cdf_quadrature(double y, double mu, double phi) {
  const double a = mu * phi, b = (1.0 - mu) * phi;
  const double log_norm = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  boost::math::quadrature::tanh_sinh<double> integrator;
  auto side = [&](double near_shape, double far_shape, double width) {
    auto g = [&](double s) {
      const double t = std::pow(s, 1.0 / near_shape);
      return t >= 1.0 ? 0.0 : std::exp((far_shape - 1.0) * std::log1p(-t));
    };
    return std::exp(log_norm - std::log(near_shape)) * integrator.integrate(g, 0.0, std::pow(width, near_shape), 1e-15);
  };
  if (y <= a / (a + b)) return side(a, b, y);
  return 1.0 - side(b, a, 1.0 - y);
}

// Five-point central differences. Slope coefficients multiply a pick number
// up to 256, so their step is scaled down accordingly.
inline std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& f, std::vector<double> x) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t k = i % kBlockDim;
    const double h = (k == 1 || k == 7) ? 1e-6 : 1e-4;
    const double keep = x[i];
    auto at = [&](double d) {
      x[i] = keep + d;
      return f(x);
    };
    g[i] = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
    x[i] = keep;
  }
  return g;
}

inline double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Draws n outcomes from the spike-plus-Beta model with agnostic coefficients
// `theta`, picks uniform on 1..256 and positions uniform over all groups.
inline std::vector<PickRecord> synth_agnostic(std::span<const double> theta, std::size_t n, std::uint64_t seed,
                                              double y_bust = kDefaultYBust) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(1, 256);
  std::uniform_int_distribution<int> pos(0, static_cast<int>(kNumPositions) - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<PickRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    PickRecord r;
    r.draft_year = 2013 + static_cast<int>(i % 11);
    r.draft_position = pick(rng);
    r.position_group = static_cast<Position>(pos(rng));
    const double x = r.draft_position;
    const double bp = bust_prob(Variant::agnostic, theta, x);
    if (unif(rng) < bp) {
      r.outcome_y = unif(rng) * y_bust;
    } else {
      const double mu = mean_mu(Variant::agnostic, theta, x);
      const double phi = precision_phi(Variant::agnostic, theta, x);
      std::gamma_distribution<double> ga(mu * phi, 1.0), gb((1.0 - mu) * phi, 1.0);
      double y = 0.0;
      do {
        const double u = ga(rng), v = gb(rng);
        y = u / (u + v);
      } while (!(y > y_bust && y < 1.0));
      r.outcome_y = y;
    }
    out.push_back(r);
  }
  return out;
}

// Synthetic data for the hierarchical model: each position's block is
// `base` plus a small per-position shift of the intercepts.
inline std::vector<PickRecord> synth_positions(std::size_t n, std::uint64_t seed) {
  std::vector<PickRecord> out;
  for (std::size_t p = 0; p < kNumPositions; ++p) {
    std::vector<double> theta = kTruthAgnostic;
    theta[0] += 0.1 * (static_cast<double>(p) - 5.0) / 5.0;
    theta[2] += 0.2 * (static_cast<double>(p) - 5.0) / 5.0;
    auto part = synth_agnostic(theta, n / kNumPositions, seed + p);
    for (auto& r : part) {
      r.position_group = static_cast<Position>(p);
      out.push_back(r);
    }
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::filesystem::path data_dir() { return std::filesystem::path(DRAFTVAL_SOURCE_DIR) / "data"; }

// Fresh scratch directory under the system temp directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("draftval_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace draftval::testing
