#include <cmath>
#include <stdexcept>

#include "draftval/inference.hpp"
#include "draftval/kernels.hpp"
#include "json.hpp"

namespace draftval {

std::optional<double> rhat_from_segments(const std::vector<std::vector<double>>& segments) {
  if (segments.size() < 2) throw std::invalid_argument("R-hat needs at least two segments");
  const std::size_t n = segments.front().size();
  for (const auto& s : segments) {
    if (s.size() != n) throw std::invalid_argument("R-hat segments must have equal length");
  }
  if (n < 2) return std::nullopt;
  const double m = static_cast<double>(segments.size());
  const double nn = static_cast<double>(n);
  std::vector<double> means;
  double w = 0.0;
  for (const auto& s : segments) {
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= nn;
    double ss = 0.0;
    for (double v : s) ss += (v - mean) * (v - mean);
    w += ss / (nn - 1.0);
    means.push_back(mean);
  }
  w /= m;
  double grand = 0.0;
  for (double v : means) grand += v;
  grand /= m;
  double b_over_n = 0.0;
  for (double v : means) b_over_n += (v - grand) * (v - grand);
  b_over_n /= (m - 1.0);
  if (!(w > 0.0)) return std::nullopt;
  const double var_plus = (nn - 1.0) / nn * w + b_over_n;
  return std::sqrt(var_plus / w);
}

std::vector<std::optional<double>> gelman_rubin(const PosteriorSamples& samples, bool split) {
  const std::size_t chains = samples.num_chains();
  if (chains == 0) throw std::invalid_argument("R-hat: no chains");
  split = split || chains == 1;
  const std::size_t d = samples.dim();
  std::vector<std::optional<double>> out(d);
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<std::vector<double>> segs;
    for (std::size_t c = 0; c < chains; ++c) {
      const std::size_t lo = samples.chain_offsets[c], hi = samples.chain_offsets[c + 1];
      const std::size_t len = hi - lo;
      if (split) {
        const std::size_t half = len / 2;
        std::vector<double> first, second;
        for (std::size_t i = 0; i < half; ++i) {
          first.push_back(samples.draws[(lo + i) * d + k]);
          second.push_back(samples.draws[(hi - half + i) * d + k]);
        }
        segs.push_back(std::move(first));
        segs.push_back(std::move(second));
      } else {
        std::vector<double> seg;
        for (std::size_t i = lo; i < hi; ++i) seg.push_back(samples.draws[i * d + k]);
        segs.push_back(std::move(seg));
      }
    }
    out[k] = rhat_from_segments(segs);
  }
  return out;
}

bool FitReport::converged(double threshold) const {
  for (const auto& r : rhat) {
    if (!r || !(*r < threshold)) return false;
  }
  return !rhat.empty();
}

FitReport make_fit_report(const McmcResult& result, double wall_seconds) {
  FitReport r;
  r.variant = result.samples.variant;
  r.names = result.samples.names;
  r.rhat = gelman_rubin(result.samples, true);
  r.start = r.variant == Variant::hierarchical ? "pooled_moments" : "map";
  if (r.variant == Variant::hierarchical) {
    const auto coef = param_names(Variant::agnostic);
    for (std::size_t k = 0; k < kBlockDim; ++k) {
      if (result.centring[k]) r.centred.push_back(coef[k]);
    }
  }
  r.map_params = result.map.params;
  r.map_log_posterior = result.map.log_posterior;
  r.map_converged = result.map.converged;
  r.map_iterations = result.map.iterations;
  r.wall_seconds = wall_seconds;
  r.divergences = result.divergences;
  r.rejections = result.rejections;
  r.divergence_flag = result.divergence_flag;
  r.acceptance = result.samples.meta.acceptance;
  r.kernels = kernels::active_kernels().name;
  return r;
}

std::string FitReport::to_json() const {
  nlohmann::json j;
  j["variant"] = std::string(variant_name(variant));
  nlohmann::json params = nlohmann::json::array();
  for (std::size_t k = 0; k < names.size(); ++k) {
    nlohmann::json p;
    p["name"] = names[k];
    p["rhat"] = k < rhat.size() && rhat[k] ? nlohmann::json(*rhat[k]) : nlohmann::json(nullptr);
    p["map"] = k < map_params.size() ? nlohmann::json(map_params[k]) : nlohmann::json(nullptr);
    params.push_back(p);
  }
  j["parameters"] = params;
  j["converged"] = converged();
  j["start"] = start;
  if (variant == Variant::hierarchical) j["centred"] = centred;
  j["map_log_posterior"] = map_log_posterior;
  j["map_converged"] = map_converged;
  j["map_iterations"] = map_iterations;
  j["wall_seconds"] = wall_seconds;
  j["divergences"] = divergences;
  j["rejections"] = rejections;
  j["divergence_flag"] = divergence_flag;
  j["acceptance"] = acceptance;
  j["kernels"] = kernels;
  return j.dump(2);
}

}  // namespace draftval
