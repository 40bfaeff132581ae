#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "draftval/types.hpp"

namespace draftval {

enum class Variant { agnostic, hierarchical };

std::string_view variant_name(Variant v);
std::optional<Variant> parse_variant(std::string_view name);

// Coefficient block order: alpha0, alpha1, beta1..beta4, gamma0, gamma1.
inline constexpr std::size_t kBlockDim = 8;
inline constexpr std::size_t kAgnosticDim = kBlockDim;
// Hierarchical layout: 11 position blocks, then population means, then scales.
inline constexpr std::size_t kHierPopOffset = kNumPositions * kBlockDim;
inline constexpr std::size_t kHierTauOffset = kHierPopOffset + kBlockDim;
inline constexpr std::size_t kHierDim = kHierTauOffset + kBlockDim;

inline constexpr double kPriorSd = 10.0;
inline constexpr double kBetaClampLo = 1e-6;
inline constexpr double kBetaClampHi = 1.0 - 1e-6;

std::size_t param_dim(Variant v);
std::vector<std::string> param_names(Variant v);

// Offset of the coefficient block used for `pos`. Agnostic parameters ignore
// pos; hierarchical parameters require it (std::invalid_argument otherwise).
std::size_t block_offset(Variant v, std::optional<Position> pos);

double bust_prob(Variant v, std::span<const double> theta, double x, std::optional<Position> pos = std::nullopt);
double mean_mu(Variant v, std::span<const double> theta, double x, std::optional<Position> pos = std::nullopt);
double precision_phi(Variant v, std::span<const double> theta, double x,
                     std::optional<Position> pos = std::nullopt);

// Named-block JSON: {"variant", "alpha", "beta", "gamma"} for the agnostic
// model; {"variant", "positions": [{"position", "alpha", "beta", "gamma"}...],
// "population": {...}, "tau": {...}} for the hierarchical one.
std::string params_to_json(Variant v, std::span<const double> theta);
std::vector<double> params_from_json(std::string_view text, Variant expected);

struct ModelSettings {
  double y_bust = kDefaultYBust;
  bool normalize_tail = false;
};

// Spike-plus-Beta density of the outcome given draft position. Observations
// are reduced to per-(block, pick) sufficient statistics at construction, so
// each evaluation costs O(distinct picks) rather than O(observations).
class DensityModel {
 public:
  DensityModel(Variant variant, const std::vector<PickRecord>& picks, ModelSettings settings = {});

  Variant variant() const { return variant_; }
  std::size_t dim() const { return param_dim(variant_); }
  const ModelSettings& settings() const { return settings_; }
  std::size_t num_observations() const { return n_obs_; }
  std::size_t num_busts() const { return n_bust_total_; }
  std::uint64_t data_hash() const { return data_hash_; }

  // Each writes the gradient into grad when grad is non-empty (size dim()).
  double log_likelihood(std::span<const double> theta, std::span<double> grad = {}) const;
  double log_prior(std::span<const double> theta, std::span<double> grad = {}) const;
  double log_posterior(std::span<const double> theta, std::span<double> grad = {}) const;

  bool in_support(std::span<const double> theta) const;

  // Agnostic model over the observations of one position group of a
  // hierarchical model (same settings and sufficient statistics).
  DensityModel position_model(Position pos) const;

  // Sampler space. Agnostic: identity. Hierarchical: for coefficient k the
  // position values are stored as-is when centring()[k] is set and as
  // z = (theta_pos - mean) / tau otherwise; means unchanged; log tau. The
  // density includes the Jacobian of the map back to theta. All coefficients
  // are non-centred by default.
  using CentringMask = std::array<bool, kBlockDim>;
  const CentringMask& centring() const { return centring_; }
  void set_centring(const CentringMask& mask) { centring_ = mask; }

  void to_unconstrained(std::span<const double> theta, std::span<double> u) const;
  void from_unconstrained(std::span<const double> u, std::span<double> theta) const;
  double log_density_unconstrained(std::span<const double> u, std::span<double> grad = {}) const;

 private:
  DensityModel(Variant variant, ModelSettings settings) : variant_(variant), settings_(settings) {}

  struct Group {
    std::size_t offset = 0;
    std::size_t size = 0;  // padded to a multiple of 4
  };

  double block_loglik(std::size_t group, const double* coef, double* grad) const;
  double tail_norm_term(std::size_t group, const double* coef, double* grad) const;

  Variant variant_;
  ModelSettings settings_;
  CentringMask centring_{};
  std::size_t n_obs_ = 0;
  std::size_t n_bust_total_ = 0;
  std::uint64_t data_hash_ = 0;
  std::vector<Group> groups_;
  std::vector<double> x_, b0_, b1_, b2_, b3_, n_bust_, n_tail_, s1_, s2_;
};

}  // namespace draftval
