// Compiled with -mavx2 -mfma; only reached through dispatch after a CPU check.
#include <immintrin.h>

#include <cstring>

#include "draftval/kernels.hpp"

namespace draftval::kernels {
namespace {

using V = __m256d;

inline V set1(double v) { return _mm256_set1_pd(v); }
inline V add(V a, V b) { return _mm256_add_pd(a, b); }
inline V sub(V a, V b) { return _mm256_sub_pd(a, b); }
inline V mul(V a, V b) { return _mm256_mul_pd(a, b); }
inline V div(V a, V b) { return _mm256_div_pd(a, b); }
inline V fma(V a, V b, V c) { return _mm256_fmadd_pd(a, b, c); }
inline V vmin(V a, V b) { return _mm256_min_pd(a, b); }
inline V vmax(V a, V b) { return _mm256_max_pd(a, b); }
inline V select(V mask, V if_true, V if_false) { return _mm256_blendv_pd(if_false, if_true, mask); }
inline V abs(V a) { return _mm256_andnot_pd(set1(-0.0), a); }

constexpr double kLn2Hi = 6.93147180369123816490e-01;
constexpr double kLn2Lo = 1.90821492927058770002e-10;

// exp(x) for x in [-708.39, 709]; inputs outside are clamped.
inline V exp_pd(V x) {
  x = vmax(vmin(x, set1(709.0)), set1(-708.39));
  const V n = _mm256_round_pd(mul(x, set1(1.4426950408889634)), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  V r = _mm256_fnmadd_pd(n, set1(kLn2Hi), x);
  r = _mm256_fnmadd_pd(n, set1(kLn2Lo), r);
  // Taylor series through r^13; |r| <= ln2/2.
  V p = set1(1.0 / 6227020800.0);
  p = fma(p, r, set1(1.0 / 479001600.0));
  p = fma(p, r, set1(1.0 / 39916800.0));
  p = fma(p, r, set1(1.0 / 3628800.0));
  p = fma(p, r, set1(1.0 / 362880.0));
  p = fma(p, r, set1(1.0 / 40320.0));
  p = fma(p, r, set1(1.0 / 5040.0));
  p = fma(p, r, set1(1.0 / 720.0));
  p = fma(p, r, set1(1.0 / 120.0));
  p = fma(p, r, set1(1.0 / 24.0));
  p = fma(p, r, set1(1.0 / 6.0));
  p = fma(p, r, set1(0.5));
  p = fma(p, r, set1(1.0));
  p = fma(p, r, set1(1.0));
  const __m256i e = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(n));
  const __m256i scale = _mm256_slli_epi64(_mm256_add_epi64(e, _mm256_set1_epi64x(1023)), 52);
  return mul(p, _mm256_castsi256_pd(scale));
}

// log(x) for positive normal x.
inline V log_pd(V x) {
  const __m256i bits = _mm256_castpd_si256(x);
  const __m256i biased = _mm256_srli_epi64(bits, 52);
  const __m256i mant_bits = _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL)),
                                            _mm256_set1_epi64x(0x3FF0000000000000LL));
  V m = _mm256_castsi256_pd(mant_bits);
  // Integer-to-double via the 2^52 magic constant.
  V e = sub(_mm256_castsi256_pd(_mm256_or_si256(biased, _mm256_set1_epi64x(0x4330000000000000LL))),
            set1(4503599627370496.0));
  e = sub(e, set1(1023.0));
  const V big = _mm256_cmp_pd(m, set1(1.4142135623730951), _CMP_GT_OQ);
  m = select(big, mul(m, set1(0.5)), m);
  e = select(big, add(e, set1(1.0)), e);
  const V f = div(sub(m, set1(1.0)), add(m, set1(1.0)));
  const V f2 = mul(f, f);
  V p = set1(1.0 / 23.0);
  p = fma(p, f2, set1(1.0 / 21.0));
  p = fma(p, f2, set1(1.0 / 19.0));
  p = fma(p, f2, set1(1.0 / 17.0));
  p = fma(p, f2, set1(1.0 / 15.0));
  p = fma(p, f2, set1(1.0 / 13.0));
  p = fma(p, f2, set1(1.0 / 11.0));
  p = fma(p, f2, set1(1.0 / 9.0));
  p = fma(p, f2, set1(1.0 / 7.0));
  p = fma(p, f2, set1(1.0 / 5.0));
  p = fma(p, f2, set1(1.0 / 3.0));
  const V logm = mul(mul(set1(2.0), f), fma(p, f2, set1(1.0)));
  return fma(e, set1(kLn2Hi), fma(e, set1(kLn2Lo), logm));
}

// log(1 + x) for x > -1 with full relative accuracy near zero.
inline V log1p_pd(V x) {
  const V u = add(set1(1.0), x);
  const V du = sub(u, set1(1.0));
  const V exact = _mm256_cmp_pd(du, set1(0.0), _CMP_EQ_OQ);
  const V r = mul(log_pd(u), div(x, select(exact, set1(1.0), du)));
  return select(exact, x, r);
}

// lgamma for z > 0: shift below 8 by the recurrence, then Stirling.
inline V lgamma_pd(V z) {
  const V small = _mm256_cmp_pd(z, set1(8.0), _CMP_LT_OQ);
  const V zc = vmin(z, set1(8.0));
  V prod = zc;
  for (int k = 1; k < 8; ++k) prod = mul(prod, add(zc, set1(static_cast<double>(k))));
  const V w = select(small, add(z, set1(8.0)), z);
  const V iw = div(set1(1.0), w);
  const V iw2 = mul(iw, iw);
  V s = set1(-3617.0 / 122400.0);
  s = fma(s, iw2, set1(1.0 / 156.0));
  s = fma(s, iw2, set1(-691.0 / 360360.0));
  s = fma(s, iw2, set1(1.0 / 1188.0));
  s = fma(s, iw2, set1(-1.0 / 1680.0));
  s = fma(s, iw2, set1(1.0 / 1260.0));
  s = fma(s, iw2, set1(-1.0 / 360.0));
  s = fma(s, iw2, set1(1.0 / 12.0));
  s = mul(s, iw);
  const V lg = add(sub(fma(sub(w, set1(0.5)), log_pd(w), set1(0.91893853320467274178)), w), s);
  return select(small, sub(lg, log_pd(prod)), lg);
}

// digamma for z > 0: shift below 8 by the recurrence, then the asymptotic series.
inline V digamma_pd(V z) {
  const V small = _mm256_cmp_pd(z, set1(8.0), _CMP_LT_OQ);
  const V zc = vmin(z, set1(8.0));
  V shift = div(set1(1.0), zc);
  for (int k = 1; k < 8; ++k) shift = add(shift, div(set1(1.0), add(zc, set1(static_cast<double>(k)))));
  const V w = select(small, add(z, set1(8.0)), z);
  const V iw = div(set1(1.0), w);
  const V iw2 = mul(iw, iw);
  V s = set1(3617.0 / 8160.0);
  s = fma(s, iw2, set1(-1.0 / 12.0));
  s = fma(s, iw2, set1(691.0 / 32760.0));
  s = fma(s, iw2, set1(-1.0 / 132.0));
  s = fma(s, iw2, set1(1.0 / 240.0));
  s = fma(s, iw2, set1(-1.0 / 252.0));
  s = fma(s, iw2, set1(1.0 / 120.0));
  s = fma(s, iw2, set1(-1.0 / 12.0));
  const V psi = add(sub(log_pd(w), mul(set1(0.5), iw)), mul(s, iw2));
  return select(small, sub(psi, shift), psi);
}

struct LogisticV {
  V p, q, log_p, log_q;
};

inline LogisticV logistic_parts(V eta) {
  const V e = exp_pd(sub(set1(0.0), abs(eta)));
  const V l1p = log1p_pd(e);
  const V inv = div(set1(1.0), add(set1(1.0), e));
  const V pos = _mm256_cmp_pd(eta, set1(0.0), _CMP_GE_OQ);
  const V ei = mul(e, inv);
  LogisticV out;
  out.p = select(pos, inv, ei);
  out.q = select(pos, ei, inv);
  const V zero = set1(0.0);
  out.log_p = sub(zero, add(vmax(sub(zero, eta), zero), l1p));
  out.log_q = sub(zero, add(vmax(eta, zero), l1p));
  return out;
}

inline double hsum(V v) {
  alignas(32) double t[4];
  _mm256_store_pd(t, v);
  return (t[0] + t[1]) + (t[2] + t[3]);
}

double cell_loglik(const CellBlock& c, const double* coef, double* grad) {
  const V a0 = set1(coef[0]), a1 = set1(coef[1]);
  const V c0 = set1(coef[2]), c1 = set1(coef[3]), c2 = set1(coef[4]), c3 = set1(coef[5]);
  const V g0 = set1(coef[6]), g1 = set1(coef[7]);
  const V one = set1(1.0);
  V ll = set1(0.0);
  V acc[8];
  for (auto& v : acc) v = set1(0.0);
  for (std::size_t i = 0; i < c.size; i += 4) {
    const V x = _mm256_loadu_pd(c.x + i);
    const V b0 = _mm256_loadu_pd(c.basis[0] + i), b1 = _mm256_loadu_pd(c.basis[1] + i);
    const V b2 = _mm256_loadu_pd(c.basis[2] + i), b3 = _mm256_loadu_pd(c.basis[3] + i);
    const V nb = _mm256_loadu_pd(c.n_bust + i), nt = _mm256_loadu_pd(c.n_tail + i);
    const V s1 = _mm256_loadu_pd(c.sum_log_y + i), s2 = _mm256_loadu_pd(c.sum_log1m_y + i);

    const LogisticV bust = logistic_parts(fma(a1, x, a0));
    const LogisticV mean = logistic_parts(fma(c3, b3, fma(c2, b2, fma(c1, b1, mul(c0, b0)))));
    const V phi = exp_pd(fma(g1, x, g0));
    const V a = mul(mean.p, phi);
    const V b = mul(mean.q, phi);

    const V lg = sub(sub(lgamma_pd(phi), lgamma_pd(a)), lgamma_pd(b));
    V term = mul(nb, bust.log_p);
    term = fma(nt, add(bust.log_q, lg), term);
    term = fma(sub(a, one), s1, term);
    term = fma(sub(b, one), s2, term);
    ll = add(ll, term);

    if (grad != nullptr) {
      const V g_bp = sub(mul(nb, bust.q), mul(nt, bust.p));
      const V psi_a = digamma_pd(a), psi_b = digamma_pd(b), psi_phi = digamma_pd(phi);
      const V g_mu = mul(mul(phi, add(mul(nt, sub(psi_b, psi_a)), sub(s1, s2))), mul(mean.p, mean.q));
      const V inner = sub(sub(psi_phi, mul(mean.p, psi_a)), mul(mean.q, psi_b));
      const V g_phi = mul(phi, add(mul(nt, inner), add(mul(mean.p, s1), mul(mean.q, s2))));
      acc[0] = add(acc[0], g_bp);
      acc[1] = fma(g_bp, x, acc[1]);
      acc[2] = fma(g_mu, b0, acc[2]);
      acc[3] = fma(g_mu, b1, acc[3]);
      acc[4] = fma(g_mu, b2, acc[4]);
      acc[5] = fma(g_mu, b3, acc[5]);
      acc[6] = add(acc[6], g_phi);
      acc[7] = fma(g_phi, x, acc[7]);
    }
  }
  if (grad != nullptr) {
    for (int k = 0; k < 8; ++k) grad[k] += hsum(acc[k]);
  }
  return hsum(ll);
}

void links(const double* coef, const double* x, const double* const* basis, std::size_t n, double* bp, double* mu,
           double* phi) {
  const V a0 = set1(coef[0]), a1 = set1(coef[1]);
  const V c0 = set1(coef[2]), c1 = set1(coef[3]), c2 = set1(coef[4]), c3 = set1(coef[5]);
  const V g0 = set1(coef[6]), g1 = set1(coef[7]);
  for (std::size_t i = 0; i < n; i += 4) {
    const V xv = _mm256_loadu_pd(x + i);
    const V eta_mu = fma(c3, _mm256_loadu_pd(basis[3] + i),
                         fma(c2, _mm256_loadu_pd(basis[2] + i),
                             fma(c1, _mm256_loadu_pd(basis[1] + i), mul(c0, _mm256_loadu_pd(basis[0] + i)))));
    _mm256_storeu_pd(bp + i, logistic_parts(fma(a1, xv, a0)).p);
    _mm256_storeu_pd(mu + i, logistic_parts(eta_mu).p);
    _mm256_storeu_pd(phi + i, exp_pd(fma(g1, xv, g0)));
  }
}

template <V (*F)(V)>
void apply(const double* in, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, F(_mm256_loadu_pd(in + i)));
  if (i < n) {
    double buf[4] = {1.0, 1.0, 1.0, 1.0};
    std::memcpy(buf, in + i, (n - i) * sizeof(double));
    double res[4];
    _mm256_storeu_pd(res, F(_mm256_loadu_pd(buf)));
    std::memcpy(out + i, res, (n - i) * sizeof(double));
  }
}

}  // namespace

namespace detail {
const KernelSet& avx2_kernel_set() {
  static const KernelSet set{"avx2",         &cell_loglik,          &links,
                             &apply<exp_pd>, &apply<log_pd>,        &apply<log1p_pd>,
                             &apply<lgamma_pd>, &apply<digamma_pd>};
  return set;
}
}  // namespace detail

}  // namespace draftval::kernels
