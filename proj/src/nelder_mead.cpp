#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "draftval/optimize.hpp"

namespace draftval {

namespace {

struct Simplex {
  std::vector<std::vector<double>> pts;
  std::vector<double> vals;
};

}  // namespace

NelderMeadResult minimize_nelder_mead(const PlainObjective& f, std::vector<double> x0,
                                      const NelderMeadOptions& options) {
  const std::size_t n = x0.size();
  NelderMeadResult res;
  int evals = 0;
  // Past the budget, points score +inf without calling f, so a shrink or the
  // initial simplex cannot overrun max_evaluations.
  auto eval = [&](const std::vector<double>& x) {
    if (evals >= options.max_evaluations) return std::numeric_limits<double>::infinity();
    ++evals;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<double> best_x = std::move(x0);
  double best_v = eval(best_x);
  bool converged = false;

  for (int round = 0; round <= options.restarts && evals < options.max_evaluations; ++round) {
    Simplex s;
    s.pts.push_back(best_x);
    s.vals.push_back(best_v);
    for (std::size_t i = 0; i < n; ++i) {
      auto p = best_x;
      p[i] += options.initial_step * std::max(1.0, std::fabs(p[i]));
      s.vals.push_back(eval(p));
      s.pts.push_back(std::move(p));
    }
    std::vector<std::size_t> order(n + 1);
    converged = false;
    while (evals < options.max_evaluations) {
      std::iota(order.begin(), order.end(), 0);
      // Stable sort keeps the tie-break deterministic.
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.vals[a] < s.vals[b]; });
      const auto& lo = s.pts[order.front()];
      double diam = 0.0;
      for (std::size_t k = 1; k <= n; ++k) {
        for (std::size_t i = 0; i < n; ++i) diam = std::max(diam, std::fabs(s.pts[order[k]][i] - lo[i]));
      }
      const double spread = s.vals[order.back()] - s.vals[order.front()];
      if (std::isfinite(spread) && spread <= options.f_tol * std::max(1.0, std::fabs(s.vals[order.front()])) &&
          diam <= options.x_tol) {
        converged = true;
        break;
      }
      const std::size_t worst = order.back();
      const std::size_t second = order[n - 1];
      std::vector<double> centroid(n, 0.0);
      for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < n; ++i) centroid[i] += s.pts[order[k]][i] / static_cast<double>(n);
      }
      auto along = [&](double t) {
        std::vector<double> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = centroid[i] + t * (s.pts[worst][i] - centroid[i]);
        return p;
      };
      auto refl = along(-1.0);
      const double fr = eval(refl);
      if (fr < s.vals[order.front()]) {
        auto exp = along(-2.0);
        const double fe = eval(exp);
        if (fe < fr) {
          s.pts[worst] = std::move(exp);
          s.vals[worst] = fe;
        } else {
          s.pts[worst] = std::move(refl);
          s.vals[worst] = fr;
        }
        continue;
      }
      if (fr < s.vals[second]) {
        s.pts[worst] = std::move(refl);
        s.vals[worst] = fr;
        continue;
      }
      const bool outside = fr < s.vals[worst];
      auto con = along(outside ? -0.5 : 0.5);
      const double fc = eval(con);
      if (fc < (outside ? fr : s.vals[worst])) {
        s.pts[worst] = std::move(con);
        s.vals[worst] = fc;
        continue;
      }
      const auto anchor = s.pts[order.front()];
      for (std::size_t k = 1; k <= n; ++k) {
        auto& p = s.pts[order[k]];
        for (std::size_t i = 0; i < n; ++i) p[i] = anchor[i] + 0.5 * (p[i] - anchor[i]);
        s.vals[order[k]] = eval(p);
      }
    }
    const auto it = std::min_element(s.vals.begin(), s.vals.end());
    const std::size_t idx = static_cast<std::size_t>(it - s.vals.begin());
    if (*it <= best_v) {
      best_v = *it;
      best_x = s.pts[idx];
    }
  }
  res.x = std::move(best_x);
  res.value = best_v;
  res.evaluations = evals;
  res.converged = converged;
  return res;
}

}  // namespace draftval
