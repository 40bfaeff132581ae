#include <gtest/gtest.h>

#include <cmath>

#include "draftval/inference.hpp"
#include "test_support.hpp"

namespace draftval {
namespace {

using testing::kTruthAgnostic;

// Correlated 3-d Gaussian target.
struct Gaussian {
  Eigen::Vector3d mean{1.0, -2.0, 0.5};
  Eigen::Matrix3d cov;
  Eigen::Matrix3d prec;
  Gaussian() {
    cov << 1.0, 0.6, 0.0, 0.6, 2.0, -0.3, 0.0, -0.3, 0.25;
    prec = cov.inverse();
  }
  double operator()(std::span<const double> x, std::span<double> g) const {
    const Eigen::Vector3d d = Eigen::Map<const Eigen::Vector3d>(x.data()) - mean;
    const Eigen::Vector3d pg = -(prec * d);
    if (!g.empty()) Eigen::Map<Eigen::Vector3d>(g.data()) = pg;
    return 0.5 * d.dot(pg);
  }
};

class GaussianSampling : public ::testing::TestWithParam<SamplerKind> {};

TEST_P(GaussianSampling, RecoversMomentsAndIsDeterministic) {
  const Gaussian target;
  SamplerConfig cfg;
  cfg.kind = GetParam();
  cfg.iterations = GetParam() == SamplerKind::hmc ? 6000 : 40000;
  cfg.burn_in = 1000;
  cfg.seed = 99;
  const std::vector<double> center = {0.0, 0.0, 0.0};
  const Eigen::MatrixXd start_cov = Eigen::MatrixXd::Identity(3, 3);
  const auto res = sample_chain(std::cref(target), center, start_cov, cfg, 0);
  const std::size_t n = res.draws.size() / 3;
  ASSERT_EQ(n, static_cast<std::size_t>(cfg.iterations - cfg.burn_in));
  Eigen::Vector3d m = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) m += Eigen::Map<const Eigen::Vector3d>(res.draws.data() + 3 * i);
  m /= static_cast<double>(n);
  Eigen::Matrix3d c = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d d = Eigen::Map<const Eigen::Vector3d>(res.draws.data() + 3 * i) - m;
    c += d * d.transpose();
  }
  c /= static_cast<double>(n - 1);
  for (int k = 0; k < 3; ++k) {
    const double sd = std::sqrt(target.cov(k, k));
    EXPECT_NEAR(m[k], target.mean[k], 0.1 * sd) << k;
    EXPECT_NEAR(c(k, k), target.cov(k, k), 0.15 * target.cov(k, k)) << k;
  }
  EXPECT_NEAR(c(0, 1), 0.6, 0.15);
  // Warmup adapts toward 0.8 for HMC and 0.234 for the random walk.
  EXPECT_NEAR(res.acceptance, GetParam() == SamplerKind::hmc ? 0.8 : 0.234, 0.1);

  const auto again = sample_chain(std::cref(target), center, start_cov, cfg, 0);
  EXPECT_EQ(again.draws, res.draws);
  const auto other = sample_chain(std::cref(target), center, start_cov, cfg, 1);
  EXPECT_NE(other.draws, res.draws);
}

INSTANTIATE_TEST_SUITE_P(Samplers, GaussianSampling, ::testing::Values(SamplerKind::hmc, SamplerKind::rwm));

TEST(Sampler, HmcAdaptsTowardTargetAcceptance) {
  const Gaussian target;
  SamplerConfig cfg;
  cfg.iterations = 3000;
  cfg.burn_in = 1500;
  cfg.target_accept = 0.8;
  const auto res = sample_chain(std::cref(target), std::vector<double>{1.0, -2.0, 0.5},
                                Eigen::MatrixXd::Identity(3, 3), cfg, 0);
  EXPECT_NEAR(res.acceptance, 0.8, 0.12);
  EXPECT_EQ(res.divergences, 0u);
}

TEST(Sampler, NamesParse) {
  EXPECT_EQ(parse_sampler("hmc"), SamplerKind::hmc);
  EXPECT_EQ(parse_sampler("rwm"), SamplerKind::rwm);
  EXPECT_FALSE(parse_sampler("nuts"));
  EXPECT_EQ(sampler_name(SamplerKind::rwm), "rwm");
}

TEST(Map, RecoversGeneratingCurves) {
  const DensityModel model(Variant::agnostic, testing::synth_agnostic(kTruthAgnostic, 30000, 77));
  const auto fit = fit_map(model);
  EXPECT_TRUE(fit.converged) << fit.status << " grad " << fit.grad_sup_norm;
  EXPECT_GE(fit.log_posterior, model.log_posterior(kTruthAgnostic));
  for (double x : {1.0, 32.0, 128.0, 256.0}) {
    EXPECT_NEAR(bust_prob(Variant::agnostic, fit.params, x), bust_prob(Variant::agnostic, kTruthAgnostic, x), 0.03);
    EXPECT_NEAR(mean_mu(Variant::agnostic, fit.params, x), mean_mu(Variant::agnostic, kTruthAgnostic, x), 0.02);
  }
}

TEST(Map, RejectsNonFiniteInit) {
  const DensityModel model(Variant::agnostic, testing::synth_agnostic(kTruthAgnostic, 200, 1));
  std::vector<double> init(8, 0.0);
  init[6] = 1e6;
  EXPECT_THROW(fit_map(model, init), std::invalid_argument);
}

TEST(Map, HierarchicalStaysFiniteAndImprovesOnInit) {
  const DensityModel model(Variant::hierarchical, testing::synth_positions(5500, 4));
  const auto init = default_init(Variant::hierarchical);
  std::vector<double> u0(init.size());
  model.to_unconstrained(init, u0);
  const auto fit = fit_map(model);
  EXPECT_TRUE(std::isfinite(fit.log_posterior));
  EXPECT_GE(fit.sampler_log_density, model.log_density_unconstrained(u0));
  for (std::size_t k = 0; k < kBlockDim; ++k) EXPECT_GT(fit.params[kHierTauOffset + k], 0.0);
}

TEST(Map, HierarchicalStartPoolsPositionFits) {
  const DensityModel model(Variant::hierarchical, testing::synth_positions(11000, 6));
  const auto start = hierarchical_start(model);
  ASSERT_EQ(start.theta.size(), kHierDim);
  EXPECT_TRUE(std::isfinite(model.log_posterior(start.theta)));
  for (std::size_t k = 0; k < kBlockDim; ++k) {
    double mean = 0.0;
    for (std::size_t p = 0; p < kNumPositions; ++p) mean += start.theta[p * kBlockDim + k] / kNumPositions;
    EXPECT_NEAR(start.theta[kHierPopOffset + k], mean, 1e-12);
    const double tau = start.theta[kHierTauOffset + k];
    EXPECT_GE(tau, 0.1 * start.block_se[k] * (1.0 - 1e-12));
    EXPECT_EQ(start.centring[k], start.block_se[k] < tau);
  }
  // Generating means.
  EXPECT_NEAR(start.theta[kHierPopOffset + 0], kTruthAgnostic[0], 0.15);
  EXPECT_NEAR(start.theta[kHierPopOffset + 1], kTruthAgnostic[1], 0.002);
  EXPECT_NEAR(start.theta[kHierPopOffset + 7], kTruthAgnostic[7], 0.003);
  EXPECT_THROW(hierarchical_start(DensityModel(Variant::agnostic, testing::synth_agnostic(kTruthAgnostic, 100, 1))),
               std::invalid_argument);
}

TEST(Mcmc, HierarchicalRunReportsStartAndStaysInSupport) {
  const DensityModel model(Variant::hierarchical, testing::synth_positions(5500, 8));
  SamplerConfig cfg;
  cfg.chains = 2;
  cfg.iterations = 300;
  cfg.burn_in = 150;
  cfg.seed = 11;
  const auto res = run_mcmc(model, cfg);
  for (std::size_t i = 0; i < res.samples.num_draws(); ++i) {
    const auto d = res.samples.draw(i);
    for (std::size_t k = 0; k < kBlockDim; ++k) ASSERT_GT(d[kHierTauOffset + k], 0.0);
  }
  const auto report = make_fit_report(res, 0.0);
  EXPECT_EQ(report.start, "pooled_moments");
  const auto j = report.to_json();
  EXPECT_NE(j.find("\"start\": \"pooled_moments\""), std::string::npos);
  EXPECT_NE(j.find("\"centred\""), std::string::npos);
}

TEST(Mcmc, AgnosticRunConvergesAndIsDeterministic) {
  const DensityModel model(Variant::agnostic, testing::synth_agnostic(kTruthAgnostic, 4000, 5));
  SamplerConfig cfg;
  cfg.chains = 4;
  cfg.iterations = 1000;
  cfg.burn_in = 500;
  cfg.seed = 3;
  cfg.threads = 2;
  const auto a = run_mcmc(model, cfg);
  EXPECT_EQ(a.samples.num_chains(), 4u);
  EXPECT_EQ(a.samples.num_draws(), 2000u);
  const auto report = make_fit_report(a, 0.0);
  EXPECT_TRUE(report.converged()) << report.to_json();
  cfg.threads = 1;
  const auto b = run_mcmc(model, cfg);
  EXPECT_EQ(a.samples.draws, b.samples.draws);
}

TEST(Rhat, HandComputedValue) {
  const auto r = rhat_from_segments({{1, 2, 3}, {3, 4, 5}});
  ASSERT_TRUE(r);
  EXPECT_NEAR(*r, std::sqrt(8.0 / 3.0), 1e-15);
}

TEST(Rhat, IdenticalSegmentsGiveLowerBound) {
  const auto r = rhat_from_segments({{1, 2, 3, 4}, {1, 2, 3, 4}});
  ASSERT_TRUE(r);
  EXPECT_NEAR(*r, std::sqrt(3.0 / 4.0), 1e-15);
}

TEST(Rhat, DegenerateCases) {
  EXPECT_FALSE(rhat_from_segments({{2, 2, 2}, {2, 2, 2}}));
  EXPECT_FALSE(rhat_from_segments({{1}, {2}}));
  EXPECT_THROW(rhat_from_segments({{1, 2}}), std::invalid_argument);
  EXPECT_THROW(rhat_from_segments({{1, 2}, {1, 2, 3}}), std::invalid_argument);
}

TEST(Rhat, SingleChainIsSplit) {
  PosteriorSamples s;
  s.variant = Variant::agnostic;
  s.names = param_names(Variant::agnostic);
  s.chain_offsets = {0, 7};
  for (int i = 0; i < 7; ++i) {
    for (int k = 0; k < 8; ++k) s.draws.push_back(i < 3 ? 1.0 + i : 10.0 + i);
  }
  const auto r = gelman_rubin(s, false);
  // Halves {1,2,3} and {14,15,16}; the middle draw is dropped.
  const double expect = *rhat_from_segments({{1, 2, 3}, {14, 15, 16}});
  ASSERT_TRUE(r[0]);
  EXPECT_DOUBLE_EQ(*r[0], expect);
  EXPECT_GT(*r[0], 5.0);
}

TEST(FitReport, ConvergenceRequiresEveryRhat) {
  FitReport r;
  EXPECT_FALSE(r.converged());
  r.rhat = {1.01, 1.02};
  EXPECT_TRUE(r.converged());
  r.rhat.push_back(std::nullopt);
  EXPECT_FALSE(r.converged());
  r.rhat.back() = 1.2;
  EXPECT_FALSE(r.converged());
  EXPECT_TRUE(r.converged(1.3));
}

}  // namespace
}  // namespace draftval
