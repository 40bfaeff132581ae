#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "draftval/inference.hpp"

namespace draftval {

std::vector<double> default_init(Variant v) {
  std::vector<double> theta(param_dim(v), 0.0);
  if (v == Variant::hierarchical) {
    for (std::size_t k = 0; k < kBlockDim; ++k) theta[kHierTauOffset + k] = 1.0;
  }
  return theta;
}

MapResult fit_map(const DensityModel& model, std::span<const double> init, const MapOptions& options) {
  std::vector<double> theta0 = init.empty() ? default_init(model.variant()) : std::vector<double>(init.begin(), init.end());
  if (theta0.size() != model.dim()) throw std::invalid_argument("fit_map: init has wrong dimension");
  const double lp0 = model.log_posterior(theta0);
  if (!std::isfinite(lp0)) throw std::invalid_argument("fit_map: log posterior is not finite at init");

  std::vector<double> u0(model.dim());
  model.to_unconstrained(theta0, u0);
  GradObjective f = [&model](std::span<const double> u, std::span<double> g) {
    return model.log_density_unconstrained(u, g);
  };
  LbfgsOptions lopts;
  lopts.max_iterations = options.max_iterations;
  lopts.grad_tol = options.grad_tol;
  LbfgsResult r = maximize_lbfgs(f, u0, lopts);

  MapResult out;
  out.params.resize(model.dim());
  model.from_unconstrained(r.x, out.params);
  out.log_posterior = model.log_posterior(out.params);
  out.iterations = r.iterations;
  out.converged = r.converged;
  out.grad_sup_norm = r.grad_sup_norm;
  out.status = r.status;
  out.sampler_log_density = r.value;
  return out;
}

HierarchicalStart hierarchical_start(const DensityModel& model, const MapOptions& options) {
  if (model.variant() != Variant::hierarchical) throw std::invalid_argument("hierarchical_start: wrong variant");
  constexpr std::size_t P = kNumPositions;
  std::array<std::array<double, kBlockDim>, P> est{}, var{};
  for (std::size_t p = 0; p < P; ++p) {
    const DensityModel block = model.position_model(static_cast<Position>(p));
    const MapResult fit = fit_map(block, {}, options);
    const GradObjective f = [&block](std::span<const double> u, std::span<double> g) {
      return block.log_posterior(u, g);
    };
    const Eigen::MatrixXd cov = laplace_covariance(f, fit.params);
    for (std::size_t k = 0; k < kBlockDim; ++k) {
      est[p][k] = fit.params[k];
      var[p][k] = cov(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    }
  }
  HierarchicalStart out;
  out.theta.assign(model.dim(), 0.0);
  for (std::size_t k = 0; k < kBlockDim; ++k) {
    double mean = 0.0, mean_var = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
      mean += est[p][k] / P;
      mean_var += var[p][k] / P;
    }
    double spread = 0.0;
    for (std::size_t p = 0; p < P; ++p) spread += (est[p][k] - mean) * (est[p][k] - mean) / (P - 1);
    const double se = std::sqrt(mean_var);
    const double tau = std::max(std::sqrt(std::max(spread - mean_var, 0.0)), 0.1 * se);
    for (std::size_t p = 0; p < P; ++p) out.theta[p * kBlockDim + k] = est[p][k];
    out.theta[kHierPopOffset + k] = mean;
    out.theta[kHierTauOffset + k] = tau;
    out.block_se[k] = se;
    out.centring[k] = se < tau;
  }
  return out;
}

Eigen::MatrixXd laplace_covariance(const GradObjective& logp, std::span<const double> u) {
  const std::size_t n = u.size();
  Eigen::MatrixXd hess(n, n);
  std::vector<double> xp(u.begin(), u.end()), gp(n), gm(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double h = 1e-5 * std::max(1.0, std::fabs(u[j]));
    xp[j] = u[j] + h;
    logp(xp, gp);
    xp[j] = u[j] - h;
    logp(xp, gm);
    xp[j] = u[j];
    for (std::size_t i = 0; i < n; ++i) hess(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (gp[i] - gm[i]) / (2.0 * h);
  }
  const Eigen::MatrixXd neg = -0.5 * (hess + hess.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(neg);
  bool ok = llt.info() == Eigen::Success && neg.allFinite();
  Eigen::MatrixXd cov;
  if (ok) {
    cov = llt.solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
    ok = cov.allFinite();
  }
  if (!ok) {
    cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
      const double d = neg(i, i);
      cov(i, i) = (std::isfinite(d) && d > 1e-12) ? 1.0 / d : 1.0;
    }
  }
  return cov;
}

}  // namespace draftval
