#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "draftval/optimize.hpp"

namespace draftval {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sup_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double e : v) m = std::max(m, std::fabs(e));
  return m;
}

// Minimization problem g = -f, evaluated along a ray.
struct Ray {
  const GradObjective& f;
  const std::vector<double>& x;
  const std::vector<double>& d;
  std::vector<double> point, grad;
  int evals = 0;

  Ray(const GradObjective& fn, const std::vector<double>& x0, const std::vector<double>& dir)
      : f(fn), x(x0), d(dir), point(x0.size()), grad(x0.size()) {}

  // Returns (value, directional derivative) of g at x + a d.
  std::pair<double, double> operator()(double a) {
    for (std::size_t i = 0; i < x.size(); ++i) point[i] = x[i] + a * d[i];
    ++evals;
    const double v = -f(point, grad);
    for (double& g : grad) g = -g;
    if (!std::isfinite(v)) return {kInf, 0.0};
    double slope = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) slope += grad[i] * d[i];
    if (!std::isfinite(slope)) return {kInf, 0.0};
    return {v, slope};
  }
};

struct Trial {
  double a = 0.0, v = 0.0, dv = 0.0;
  std::vector<double> point, grad;
};

double cubic_min(const Trial& lo, const Trial& hi) {
  const double d1 = lo.dv + hi.dv - 3.0 * (lo.v - hi.v) / (lo.a - hi.a);
  const double disc = d1 * d1 - lo.dv * hi.dv;
  if (!std::isfinite(hi.v) || disc < 0.0) return 0.5 * (lo.a + hi.a);
  const double d2 = std::copysign(std::sqrt(disc), hi.a - lo.a);
  const double a = hi.a - (hi.a - lo.a) * (hi.dv + d2 - d1) / (hi.dv - lo.dv + 2.0 * d2);
  const double left = std::min(lo.a, hi.a), right = std::max(lo.a, hi.a);
  const double margin = 0.1 * (right - left);
  if (!std::isfinite(a) || a < left + margin || a > right - margin) return 0.5 * (lo.a + hi.a);
  return a;
}

// Strong-Wolfe search; returns a trial with a > 0 on success, a == 0 on failure.
Trial wolfe_search(Ray& ray, double v0, double dv0, double a_init) {
  constexpr double c1 = 1e-4, c2 = 0.9;
  Trial prev{0.0, v0, dv0, ray.x, {}};
  Trial best = prev;
  double a = a_init;
  auto capture = [&](double step) {
    auto [v, dv] = ray(step);
    return Trial{step, v, dv, ray.point, ray.grad};
  };
  auto zoom = [&](Trial lo, Trial hi) -> Trial {
    for (int it = 0; it < 40; ++it) {
      const double step = cubic_min(lo, hi);
      Trial t = capture(step);
      if (t.v > v0 + c1 * step * dv0 || t.v >= lo.v) {
        hi = t;
      } else {
        if (std::fabs(t.dv) <= -c2 * dv0) return t;
        if (t.dv * (hi.a - lo.a) >= 0.0) hi = lo;
        lo = t;
      }
      if (std::fabs(hi.a - lo.a) < 1e-16 * std::max(1.0, lo.a)) break;
    }
    return lo;
  };
  for (int it = 0; it < 40; ++it) {
    Trial t = capture(a);
    if (t.v > v0 + c1 * a * dv0 || (it > 0 && t.v >= prev.v)) return zoom(prev, t);
    if (std::fabs(t.dv) <= -c2 * dv0) return t;
    if (t.dv >= 0.0) return zoom(t, prev);
    prev = t;
    best = t;
    a *= 2.0;
  }
  return best;
}

}  // namespace

LbfgsResult maximize_lbfgs(const GradObjective& f, std::vector<double> x0, const LbfgsOptions& options) {
  const std::size_t n = x0.size();
  LbfgsResult res;
  std::vector<double> grad(n);
  double value = f(x0, grad);
  if (!std::isfinite(value)) {
    res.x = std::move(x0);
    res.value = value;
    res.status = "non-finite objective at initial point";
    return res;
  }
  // Work with the minimization gradient.
  for (double& g : grad) g = -g;
  std::vector<double> x = std::move(x0);
  double fval = -value;

  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::vector<double> d(n), alpha(options.history);

  int iter = 0;
  double qn_decrement = -1.0;
  res.status = "iteration limit";
  for (; iter < options.max_iterations; ++iter) {
    if (sup_norm(grad) < options.grad_tol) {
      res.converged = true;
      res.status = "gradient tolerance";
      break;
    }
    // Two-loop recursion.
    for (std::size_t i = 0; i < n; ++i) d[i] = -grad[i];
    const std::size_t m = s_hist.size();
    for (std::size_t j = m; j-- > 0;) {
      alpha[j] = rho_hist[j] * dot(s_hist[j], d);
      for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[j] * y_hist[j][i];
    }
    if (m > 0) {
      const double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
      for (double& e : d) e *= gamma;
    }
    for (std::size_t j = 0; j < m; ++j) {
      const double beta = rho_hist[j] * dot(y_hist[j], d);
      for (std::size_t i = 0; i < n; ++i) d[i] += (alpha[j] - beta) * s_hist[j][i];
    }
    double dv0 = dot(grad, d);
    if (!(dv0 < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -grad[i];
      dv0 = dot(grad, d);
    }
    const double a_init = m == 0 ? std::min(1.0, 1.0 / std::max(sup_norm(grad), 1e-300)) : 1.0;
    Ray ray(f, x, d);
    Trial t = wolfe_search(ray, fval, dv0, a_init);
    if (t.a == 0.0 || !(t.v < fval) || t.grad.empty()) {
      if (m == 0) {
        // Neither direction made progress. The quasi-Newton decrement -g'd
        // is the predicted gain of a full step; when it is at the rounding
        // floor of f the point is stationary to working precision.
        if (qn_decrement >= 0.0 && qn_decrement <= options.rel_decrement_tol * std::max(1.0, std::fabs(fval))) {
          res.converged = true;
          res.status = "stationary to working precision";
        } else {
          res.status = "line search failed";
        }
        break;
      }
      qn_decrement = -dv0;
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      continue;
    }
    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = t.point[i] - x[i];
      y[i] = t.grad[i] - grad[i];
    }
    const double sy = dot(s, y);
    x = std::move(t.point);
    grad = std::move(t.grad);
    fval = t.v;
    if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > options.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
  }
  if (iter == options.max_iterations && sup_norm(grad) < options.grad_tol) {
    res.converged = true;
    res.status = "gradient tolerance";
  }
  res.x = std::move(x);
  res.value = -fval;
  res.grad_sup_norm = sup_norm(grad);
  res.iterations = iter;
  return res;
}

}  // namespace draftval
