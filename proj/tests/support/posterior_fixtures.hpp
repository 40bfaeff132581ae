#pragma once

#include <random>

#include "draftval/inference.hpp"
#include "test_support.hpp"

namespace draftval::testing {

// Synthetic posterior: `draws` jittered copies of the known agnostic
// coefficients split over two chains.
inline PosteriorSamples fake_agnostic_posterior(std::size_t draws, std::uint64_t seed) {
  PosteriorSamples s;
  s.variant = Variant::agnostic;
  s.names = param_names(Variant::agnostic);
  s.chain_offsets = {0, draws / 2, draws};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (std::size_t d = 0; d < draws; ++d) {
    for (std::size_t k = 0; k < kBlockDim; ++k) {
      const double sd = (k == 1 || k == 7) ? 2e-4 : 0.05;
      s.draws.push_back(kTruthAgnostic[k] + sd * nd(rng));
    }
  }
  return s;
}

// Hierarchical counterpart: position p shifts the mean intercept by
// -0.05 * p, so QB has the highest tail mass.
inline PosteriorSamples fake_hierarchical_posterior(std::size_t draws, std::uint64_t seed) {
  PosteriorSamples s;
  s.variant = Variant::hierarchical;
  s.names = param_names(Variant::hierarchical);
  s.chain_offsets = {0, draws / 2, draws};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (std::size_t d = 0; d < draws; ++d) {
    std::vector<double> theta(kHierDim);
    for (std::size_t p = 0; p < kNumPositions; ++p) {
      for (std::size_t k = 0; k < kBlockDim; ++k) {
        const double sd = (k == 1 || k == 7) ? 2e-4 : 0.05;
        double v = kTruthAgnostic[k] + sd * nd(rng);
        if (k >= 2 && k <= 5) v -= 0.05 * static_cast<double>(p);
        theta[p * kBlockDim + k] = v;
      }
    }
    for (std::size_t k = 0; k < kBlockDim; ++k) {
      theta[kHierPopOffset + k] = kTruthAgnostic[k];
      theta[kHierTauOffset + k] = 0.1;
    }
    s.draws.insert(s.draws.end(), theta.begin(), theta.end());
  }
  return s;
}

// Cost curve decreasing linearly from 0.02 at pick 1 to 0.002 at pick 256.
inline PickCurve linear_cost() {
  PickCurve c{};
  for (std::size_t i = 0; i < kNumPicks; ++i) c[i] = 0.02 - 0.018 * static_cast<double>(i) / 255.0;
  return c;
}

}  // namespace draftval::testing
