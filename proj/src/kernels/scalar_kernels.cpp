#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "draftval/kernels.hpp"
#include "special_policy.hpp"

namespace draftval::kernels {
namespace {

using draftval::detail::quiet_policy;

inline double lgam(double z) { return boost::math::lgamma(z, quiet_policy()); }
inline double digam(double z) { return boost::math::digamma(z, quiet_policy()); }

struct Logistic {
  double p;         // logistic(eta)
  double q;         // 1 - logistic(eta)
  double log_p;
  double log_q;
};

inline Logistic logistic_parts(double eta) {
  const double e = std::exp(-std::fabs(eta));
  const double l1p = std::log1p(e);
  const double inv = 1.0 / (1.0 + e);
  Logistic out;
  out.p = eta >= 0.0 ? inv : e * inv;
  out.q = eta >= 0.0 ? e * inv : inv;
  out.log_p = -(std::max(-eta, 0.0) + l1p);
  out.log_q = -(std::max(eta, 0.0) + l1p);
  return out;
}

double cell_loglik(const CellBlock& c, const double* coef, double* grad) {
  double ll = 0.0;
  double g[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  for (std::size_t i = 0; i < c.size; ++i) {
    const double x = c.x[i];
    const double b0 = c.basis[0][i], b1 = c.basis[1][i], b2 = c.basis[2][i], b3 = c.basis[3][i];
    const double nb = c.n_bust[i], nt = c.n_tail[i], s1 = c.sum_log_y[i], s2 = c.sum_log1m_y[i];

    const Logistic bust = logistic_parts(coef[0] + coef[1] * x);
    const Logistic mean = logistic_parts(coef[2] * b0 + coef[3] * b1 + coef[4] * b2 + coef[5] * b3);
    const double phi = std::exp(coef[6] + coef[7] * x);
    const double a = mean.p * phi;
    const double b = mean.q * phi;

    ll += nb * bust.log_p + nt * (bust.log_q + lgam(phi) - lgam(a) - lgam(b)) + (a - 1.0) * s1 + (b - 1.0) * s2;

    if (grad != nullptr) {
      const double g_bp = nb * bust.q - nt * bust.p;
      const double psi_a = digam(a), psi_b = digam(b), psi_phi = digam(phi);
      const double g_mu = phi * (nt * (psi_b - psi_a) + s1 - s2) * mean.p * mean.q;
      const double g_phi = phi * (nt * (psi_phi - mean.p * psi_a - mean.q * psi_b) + mean.p * s1 + mean.q * s2);
      g[0] += g_bp;
      g[1] += g_bp * x;
      g[2] += g_mu * b0;
      g[3] += g_mu * b1;
      g[4] += g_mu * b2;
      g[5] += g_mu * b3;
      g[6] += g_phi;
      g[7] += g_phi * x;
    }
  }
  if (grad != nullptr) {
    for (int k = 0; k < 8; ++k) grad[k] += g[k];
  }
  return ll;
}

void links(const double* coef, const double* x, const double* const* basis, std::size_t n, double* bp, double* mu,
           double* phi) {
  for (std::size_t i = 0; i < n; ++i) {
    bp[i] = logistic_parts(coef[0] + coef[1] * x[i]).p;
    mu[i] = logistic_parts(coef[2] * basis[0][i] + coef[3] * basis[1][i] + coef[4] * basis[2][i] +
                           coef[5] * basis[3][i])
                .p;
    phi[i] = std::exp(coef[6] + coef[7] * x[i]);
  }
}

void v_exp(const double* in, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(in[i]);
}
void v_log(const double* in, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::log(in[i]);
}
void v_log1p(const double* in, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::log1p(in[i]);
}
void v_lgamma(const double* in, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = lgam(in[i]);
}
void v_digamma(const double* in, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = digam(in[i]);
}

}  // namespace

const KernelSet& scalar_kernels() {
  static const KernelSet set{"scalar", &cell_loglik, &links, &v_exp, &v_log, &v_log1p, &v_lgamma, &v_digamma};
  return set;
}

}  // namespace draftval::kernels
