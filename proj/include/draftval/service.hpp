#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "draftval/inference.hpp"
#include "draftval/run_config.hpp"
#include "draftval/trade_eval.hpp"
#include "draftval/trade_market.hpp"
#include "draftval/value_curves.hpp"

namespace draftval {

// Environment variable naming the default artifact directory for `serve`.
inline constexpr const char* kArtifactDirEnv = "DRAFTVAL_ARTIFACT_DIR";

// Standard artifact file names inside an output directory.
std::string posterior_file_name(Variant v);
std::string fit_report_file_name(Variant v);
inline constexpr const char* kRunConfigFile = "run_config.json";
inline constexpr const char* kMarketFitFile = "market_fit.json";

struct LoadedPosterior {
  PosteriorSamples samples;
  std::string model_hash;  // hash of the artifact bytes
};

LoadedPosterior load_posterior_with_hash(const std::filesystem::path& path,
                                         std::optional<Variant> expected = std::nullopt);

// Read-only state shared by all requests.
struct ServiceState {
  std::optional<LoadedPosterior> agnostic;
  std::optional<LoadedPosterior> hierarchical;
  std::optional<MarketFit> market;
  std::optional<PickCurve> cost;
  std::optional<ValueCurve> traditional;
  std::string config_hash;
  std::size_t max_draws = 1000;
};

// Loads whatever artifacts are present in `dir`. The cost table and picks
// come from the explicit paths, or else from the directory's run config.
// Throws ArtifactError when the directory holds no posterior artifact.
ServiceState load_service_state(const std::filesystem::path& dir, std::optional<std::filesystem::path> cost_path = {},
                                std::optional<std::filesystem::path> picks_path = {}, std::size_t max_draws = 1000);

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

using QueryParams = std::map<std::string, std::string>;

// Handlers behind the /v1 routes; pure functions of (state, request).
HttpResponse handle_health();
HttpResponse handle_meta(const ServiceState& state);
HttpResponse handle_market(const ServiceState& state);
// Query: kind (required), r, scope (default all), format=json|csv.
HttpResponse handle_curves(const ServiceState& state, const QueryParams& query);
// Body: {"down": [3], "up": [12, {"pick": 42, "years_ahead": 0}],
//        "curves": ["market", "surplus", "tail:0.178"], "scope": "all"}
HttpResponse handle_evaluate(const ServiceState& state, std::string_view body);

// Builds a curve table for trade arithmetic from the loaded artifacts.
CurveTable resolve_curve_table(const ServiceState& state, const CurveSpec& spec, Scope default_scope);
ValueCurve resolve_curve(const ServiceState& state, CurveKind kind, std::optional<double> r, Scope scope);
// Hash of the artifact a curve was computed from.
std::string curve_model_hash(const ServiceState& state, CurveKind kind, Scope scope);

// HTTP server over a loaded state.
class HttpService {
 public:
  explicit HttpService(const ServiceState& state);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  // Binds the port (0 picks a free one) and serves on a background thread.
  // Throws std::runtime_error when the port cannot be bound.
  int start(const std::string& host, int port);
  // Blocks serving on the calling thread.
  void run(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace draftval
