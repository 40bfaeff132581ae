#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "draftval/kernels.hpp"
#include "draftval/spline_basis.hpp"

namespace draftval::kernels {
namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

std::vector<double> sample(double lo, double hi, std::size_t n, std::uint64_t seed, bool log_scale = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(log_scale ? std::log(lo) : lo, log_scale ? std::log(hi) : hi);
  std::vector<double> v(n);
  for (auto& x : v) x = log_scale ? std::exp(u(rng)) : u(rng);
  return v;
}

TEST(ScalarKernels, SpecialFunctionsMatchReference) {
  const auto& k = scalar_kernels();
  const auto z = sample(1e-3, 1e4, 999, 1, true);
  std::vector<double> out(z.size());
  k.lgamma(z.data(), out.data(), z.size());
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(out[i], std::lgamma(z[i]), 1e-12 * std::max(1.0, std::abs(out[i])));
  k.digamma(z.data(), out.data(), z.size());
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_LE(rel_err(out[i], boost::math::digamma(z[i])), 1e-13);
}

class Avx2Equivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    avx = avx2_kernels();
    if (!avx) GTEST_SKIP() << "AVX2 kernels unavailable on this CPU or build";
  }
  const KernelSet* avx = nullptr;
};

TEST_F(Avx2Equivalence, ElementwiseFunctions) {
  const auto& s = scalar_kernels();
  struct Case {
    UnaryFn KernelSet::*fn;
    double lo, hi;
    bool log_scale;
    double tol;
  };
  const Case cases[] = {
      {&KernelSet::exp, -700.0, 700.0, false, 1e-14},
      {&KernelSet::log, 1e-300, 1e300, true, 1e-14},
      {&KernelSet::log1p, -0.999999, 1e6, false, 1e-14},
      {&KernelSet::log1p, 1e-12, 1e-2, true, 1e-14},
      {&KernelSet::lgamma, 1e-4, 1e5, true, 1e-12},
      {&KernelSet::digamma, 1e-4, 1e5, true, 1e-12},
  };
  std::uint64_t seed = 5;
  for (const auto& c : cases) {
    const auto in = sample(c.lo, c.hi, 1003, seed++, c.log_scale);
    std::vector<double> a(in.size()), b(in.size());
    (s.*c.fn)(in.data(), a.data(), in.size());
    (avx->*c.fn)(in.data(), b.data(), in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
      EXPECT_LE(rel_err(b[i], a[i]), c.tol) << "input " << in[i];
    }
  }
}

struct Cells {
  std::vector<double> x, b0, b1, b2, b3, nb, nt, s1, s2;
  CellBlock view() const {
    CellBlock c;
    c.x = x.data();
    c.basis[0] = b0.data();
    c.basis[1] = b1.data();
    c.basis[2] = b2.data();
    c.basis[3] = b3.data();
    c.n_bust = nb.data();
    c.n_tail = nt.data();
    c.sum_log_y = s1.data();
    c.sum_log1m_y = s2.data();
    c.size = x.size();
    return c;
  }
};

Cells random_cells(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> count(0, 12);
  std::uniform_real_distribution<double> y(0.006, 0.6);
  Cells c;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = 1.0 + static_cast<double>(i % 256);
    const auto b = evaluate_basis(x);
    c.x.push_back(x);
    c.b0.push_back(b[0]);
    c.b1.push_back(b[1]);
    c.b2.push_back(b[2]);
    c.b3.push_back(b[3]);
    c.nb.push_back(count(rng));
    const int nt = count(rng);
    double s1 = 0.0, s2 = 0.0;
    for (int j = 0; j < nt; ++j) {
      const double v = y(rng);
      s1 += std::log(v);
      s2 += std::log1p(-v);
    }
    c.nt.push_back(nt);
    c.s1.push_back(s1);
    c.s2.push_back(s2);
  }
  return c;
}

TEST_F(Avx2Equivalence, CellLogLikelihoodAndGradient) {
  const auto& s = scalar_kernels();
  const Cells cells = random_cells(260, 9);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    double coef[8] = {-0.8 + 0.3 * nd(rng), 0.008 + 0.002 * nd(rng), -1.5 + 0.5 * nd(rng), -2.0 + 0.5 * nd(rng),
                      -2.4 + 0.5 * nd(rng), -2.6 + 0.5 * nd(rng),   2.5 + 0.5 * nd(rng),  0.004 + 0.002 * nd(rng)};
    double ga[8] = {}, gb[8] = {};
    const double va = s.cell_loglik(cells.view(), coef, ga);
    const double vb = avx->cell_loglik(cells.view(), coef, gb);
    EXPECT_LE(rel_err(vb, va), 1e-12);
    for (int k = 0; k < 8; ++k) EXPECT_LE(std::abs(gb[k] - ga[k]), 1e-10 * std::max(1.0, std::abs(ga[k]))) << k;
  }
}

TEST_F(Avx2Equivalence, Links) {
  const auto& s = scalar_kernels();
  const Cells cells = random_cells(256, 2);
  const double* basis[4] = {cells.b0.data(), cells.b1.data(), cells.b2.data(), cells.b3.data()};
  const double coef[8] = {-0.8, 0.008, -1.5, -2.0, -2.4, -2.6, 3.0, 0.004};
  std::vector<double> bp1(256), mu1(256), phi1(256), bp2(256), mu2(256), phi2(256);
  s.links(coef, cells.x.data(), basis, 256, bp1.data(), mu1.data(), phi1.data());
  avx->links(coef, cells.x.data(), basis, 256, bp2.data(), mu2.data(), phi2.data());
  for (std::size_t i = 0; i < 256; ++i) {
    EXPECT_LE(rel_err(bp2[i], bp1[i]), 1e-14);
    EXPECT_LE(rel_err(mu2[i], mu1[i]), 1e-14);
    EXPECT_LE(rel_err(phi2[i], phi1[i]), 1e-14);
  }
}

TEST(KernelDispatch, ActiveSetIsNamed) {
  const auto& k = active_kernels();
  const std::string name = k.name;
  EXPECT_TRUE(name == "scalar" || name == "avx2");
}

}  // namespace
}  // namespace draftval::kernels
