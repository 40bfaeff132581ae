#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "draftval/density_model.hpp"
#include "draftval/optimize.hpp"

namespace draftval {

// ---------------------------------------------------------------- MAP

struct MapOptions {
  int max_iterations = 500;
  double grad_tol = 1e-6;
};

struct MapResult {
  std::vector<double> params;  // natural parameterization
  double log_posterior = 0.0;  // natural-space log posterior at params
  double sampler_log_density = 0.0;  // objective actually maximized
  int iterations = 0;
  bool converged = false;
  double grad_sup_norm = 0.0;
  std::string status;
};

// Zeros for the agnostic model; zero blocks and means with unit scales for the
// hierarchical model.
std::vector<double> default_init(Variant v);

// Quasi-Newton ascent in the sampler space (identity for the agnostic model,
// non-centred with log scales for the hierarchical model, whose natural-space
// posterior is unbounded as the scales shrink). The sampler-space density at
// the result is never below its value at init. Throws std::invalid_argument
// if the log posterior is not finite at init.
MapResult fit_map(const DensityModel& model, std::span<const double> init = {}, const MapOptions& options = {});

// Start point for the hierarchical model, whose joint posterior has no mode
// (it grows without bound as the scales shrink). Each position block gets its
// own agnostic MAP; the means are the block averages and each scale is the
// method-of-moments spread between blocks (variance across blocks minus the
// mean sampling variance), floored at a tenth of the typical standard error.
// Coefficient k is centred in the sampler space when the blocks pin it down
// more tightly than it varies between them (block_se[k] < tau[k]).
struct HierarchicalStart {
  std::vector<double> theta;
  std::array<double, kBlockDim> block_se{};  // root-mean-square per-block standard error
  DensityModel::CentringMask centring{};
};

HierarchicalStart hierarchical_start(const DensityModel& model, const MapOptions& options = {});

// Negative inverse Hessian of `logp` at u by central differences of the
// gradient; falls back to a diagonal estimate when not positive definite.
Eigen::MatrixXd laplace_covariance(const GradObjective& logp, std::span<const double> u);

// ---------------------------------------------------------------- sampling

enum class SamplerKind { hmc, rwm };

std::string_view sampler_name(SamplerKind k);
std::optional<SamplerKind> parse_sampler(std::string_view name);

struct SamplerConfig {
  int chains = 4;
  int iterations = 2500;  // per chain, including burn-in
  int burn_in = 1250;
  std::uint64_t seed = 1;
  SamplerKind kind = SamplerKind::hmc;
  double target_accept = 0.8;
  double integration_time = 1.5;  // in units of the adapted posterior scale
  int max_leapfrog = 256;
  double init_jitter = 1.0;  // start spread, in posterior standard deviations
  int threads = 1;
};

struct ChainResult {
  std::vector<double> draws;  // retained draws, row-major (iterations - burn_in) x dim
  double acceptance = 0.0;    // mean acceptance probability after burn-in
  std::size_t divergences = 0;
  std::size_t rejections = 0;
  double step_size = 0.0;
};

// One chain over an arbitrary log density. The chain starts at
// center + init_jitter * chol(cov) * z and owns an RNG seeded from
// (config.seed, chain_index).
ChainResult sample_chain(const GradObjective& logp, std::span<const double> center, const Eigen::MatrixXd& cov,
                         const SamplerConfig& config, std::uint64_t chain_index);

struct SamplerMeta {
  std::uint64_t seed = 0;
  int chains = 0;
  int iterations = 0;
  int burn_in = 0;
  double acceptance = 0.0;
  std::string sampler = "hmc";
  std::string data_hash;
  std::string config_hash;
};

struct PosteriorSamples {
  Variant variant = Variant::agnostic;
  ModelSettings settings;
  std::vector<std::string> names;
  std::vector<double> draws;                // natural parameters, row-major draws x dim
  std::vector<std::size_t> chain_offsets;   // chains + 1 row indices
  SamplerMeta meta;

  std::size_t dim() const { return names.size(); }
  std::size_t num_draws() const { return dim() == 0 ? 0 : draws.size() / dim(); }
  std::size_t num_chains() const { return chain_offsets.empty() ? 0 : chain_offsets.size() - 1; }
  std::span<const double> draw(std::size_t i) const { return {draws.data() + i * dim(), dim()}; }
};

struct McmcResult {
  PosteriorSamples samples;
  std::vector<ChainResult> chains;  // per-chain stats; draws moved into samples
  std::size_t divergences = 0;
  std::size_t rejections = 0;
  bool divergence_flag = false;  // more than 10% divergent transitions after burn-in
  // Agnostic: the MAP. Hierarchical: the pooled moment start (not a mode).
  MapResult map;
  DensityModel::CentringMask centring{};  // sampler space actually used
};

// Fits the MAP, derives a starting metric from the Laplace approximation and
// runs config.chains chains. Deterministic given (data, config).
McmcResult run_mcmc(const DensityModel& model, const SamplerConfig& config);

// ---------------------------------------------------------------- diagnostics

// Potential scale reduction over equal-length segments; absent when the
// pooled within-segment variance is zero or segments are shorter than 2.
std::optional<double> rhat_from_segments(const std::vector<std::vector<double>>& segments);

// Per-parameter R-hat. Chains are split in half when `split` is set or when
// there is only one chain.
std::vector<std::optional<double>> gelman_rubin(const PosteriorSamples& samples, bool split = true);

struct FitReport {
  Variant variant = Variant::agnostic;
  std::vector<std::string> names;
  std::vector<std::optional<double>> rhat;
  std::string start;  // "map" or "pooled_moments"
  std::vector<std::string> centred;  // hierarchical coefficients sampled in centred form
  std::vector<double> map_params;
  double map_log_posterior = 0.0;
  bool map_converged = false;
  int map_iterations = 0;
  double wall_seconds = 0.0;
  std::size_t divergences = 0;
  std::size_t rejections = 0;
  bool divergence_flag = false;
  double acceptance = 0.0;
  std::string kernels;

  // True when every R-hat is present and below the threshold.
  bool converged(double threshold = 1.1) const;
  std::string to_json() const;
};

// Report for a finished run: split R-hat per parameter plus MAP and sampler
// statistics.
FitReport make_fit_report(const McmcResult& result, double wall_seconds);

// ---------------------------------------------------------------- artifacts

inline constexpr int kPosteriorFormatVersion = 1;

class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// First line: JSON header; second line: CSV column names (chain, draw,
// parameters); then one row per retained draw in shortest round-trip form.
std::string serialize_posterior(const PosteriorSamples& samples);
void save_posterior(const PosteriorSamples& samples, const std::filesystem::path& path);

PosteriorSamples parse_posterior(std::string_view text, std::optional<Variant> expected = std::nullopt);
PosteriorSamples load_posterior(const std::filesystem::path& path, std::optional<Variant> expected = std::nullopt);

}  // namespace draftval
