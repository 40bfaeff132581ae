#include "draftval/service.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "draftval/data_ingest.hpp"
#include "draftval/hash.hpp"
#include "httplib.h"
#include "json.hpp"

namespace draftval {

namespace {

// A request the client can fix; carries the HTTP status and offending field.
struct RequestError : std::runtime_error {
  RequestError(int s, const std::string& msg, std::string f = "") : std::runtime_error(msg), status(s), field(std::move(f)) {}
  int status;
  std::string field;
};

HttpResponse json_response(int status, const nlohmann::ordered_json& j) { return {status, j.dump(2), "application/json"}; }

HttpResponse error_response(int status, const std::string& message, const std::string& field = "") {
  nlohmann::ordered_json j;
  j["error"] = message;
  if (!field.empty()) j["field"] = field;
  return json_response(status, j);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const LoadedPosterior& posterior_for(const ServiceState& state, Scope scope) {
  if (scope.kind == Scope::Kind::all) {
    if (!state.agnostic) throw RequestError(404, "no agnostic posterior loaded (scope 'all' needs one)", "scope");
    return *state.agnostic;
  }
  if (!state.hierarchical) {
    throw RequestError(404, "no hierarchical posterior loaded (scope '" + scope_name(scope) + "' needs one)", "scope");
  }
  return *state.hierarchical;
}

nlohmann::ordered_json curve_json(const ValueCurve& c, const std::string& model_hash, const std::string& config_hash) {
  nlohmann::ordered_json j;
  j["kind"] = std::string(curve_kind_name(c.kind));
  j["r"] = c.r ? nlohmann::ordered_json(*c.r) : nlohmann::ordered_json(nullptr);
  j["scope"] = scope_name(c.scope);
  j["anchor"] = c.anchor;
  j["anchor_pick"] = c.anchor_pick;
  j["model_hash"] = model_hash;
  j["config_hash"] = config_hash;
  auto pts = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < c.values.size(); ++i) {
    pts.push_back({{"pick", static_cast<int>(i) + 1},
                   {"mean", c.values[i].mean},
                   {"lo95", c.values[i].lo95},
                   {"hi95", c.values[i].hi95}});
  }
  j["points"] = std::move(pts);
  return j;
}

BundlePick parse_bundle_item(const nlohmann::json& item, const std::string& field) {
  BundlePick b;
  if (item.is_number_integer()) {
    b.pick_number = item.get<int>();
  } else if (item.is_object() && item.contains("pick") && item.at("pick").is_number_integer()) {
    b.pick_number = item.at("pick").get<int>();
    if (item.contains("years_ahead")) {
      if (!item.at("years_ahead").is_number_integer()) throw RequestError(400, "years_ahead must be an integer", field);
      b.years_ahead = item.at("years_ahead").get<int>();
    }
  } else {
    throw RequestError(400, "bundle entries must be a pick number or {\"pick\": n, \"years_ahead\": k}", field);
  }
  if (b.pick_number < kMinPick || b.pick_number > kMaxPick) {
    throw RequestError(400, "pick " + std::to_string(b.pick_number) + " is outside 1..256", field);
  }
  if (b.years_ahead < 0) throw RequestError(400, "years_ahead must be >= 0", field);
  return b;
}

std::vector<BundlePick> parse_bundle(const nlohmann::json& body, const std::string& side) {
  if (!body.contains(side) || !body.at(side).is_array()) throw RequestError(400, "'" + side + "' must be an array", side);
  const auto& arr = body.at(side);
  if (arr.empty()) throw RequestError(400, "'" + side + "' bundle is empty", side);
  std::vector<BundlePick> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(parse_bundle_item(arr[i], side + "[" + std::to_string(i) + "]"));
  }
  return out;
}

template <class F>
HttpResponse guarded(F&& f) {
  try {
    return f();
  } catch (const RequestError& e) {
    return error_response(e.status, e.what(), e.field);
  } catch (const std::invalid_argument& e) {
    return error_response(400, e.what());
  } catch (const std::out_of_range& e) {
    return error_response(400, e.what());
  } catch (const std::domain_error& e) {
    return error_response(422, e.what());
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

}  // namespace

std::string posterior_file_name(Variant v) { return "posterior_" + std::string(variant_name(v)) + ".csv"; }

std::string fit_report_file_name(Variant v) { return "fit_report_" + std::string(variant_name(v)) + ".json"; }

LoadedPosterior load_posterior_with_hash(const std::filesystem::path& path, std::optional<Variant> expected) {
  const std::string text = read_file(path);
  LoadedPosterior out;
  out.samples = parse_posterior(text, expected);
  out.model_hash = hex64(fnv1a(text));
  return out;
}

ServiceState load_service_state(const std::filesystem::path& dir, std::optional<std::filesystem::path> cost_path,
                                std::optional<std::filesystem::path> picks_path, std::size_t max_draws) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw ArtifactError("artifact directory not found: " + dir.string());
  ServiceState s;
  s.max_draws = max_draws;
  for (Variant v : {Variant::agnostic, Variant::hierarchical}) {
    const fs::path p = dir / posterior_file_name(v);
    if (!fs::exists(p)) continue;
    auto loaded = load_posterior_with_hash(p, v);
    (v == Variant::agnostic ? s.agnostic : s.hierarchical) = std::move(loaded);
  }
  if (!s.agnostic && !s.hierarchical) throw ArtifactError("no posterior artifact in " + dir.string());
  if (fs::exists(dir / kMarketFitFile)) s.market = market_fit_from_json(read_file(dir / kMarketFitFile));
  if (fs::exists(dir / kRunConfigFile)) {
    const RunConfig cfg = RunConfig::from_json(read_file(dir / kRunConfigFile));
    s.config_hash = cfg.hash();
    if (!cost_path && !cfg.cost_path.empty() && fs::exists(cfg.cost_path)) cost_path = cfg.cost_path;
    if (!picks_path && !cfg.picks_path.empty() && fs::exists(cfg.picks_path)) picks_path = cfg.picks_path;
  }
  if (cost_path) s.cost = cost_curve(load_cost_table(*cost_path));
  if (picks_path) s.traditional = traditional_mean_curve(load_picks(*picks_path).records);
  return s;
}

ValueCurve resolve_curve(const ServiceState& state, CurveKind kind, std::optional<double> r, Scope scope) {
  if (kind == CurveKind::market) {
    if (!state.market) throw RequestError(404, "no market fit loaded", "kind");
    if (scope.kind != Scope::Kind::all) throw RequestError(400, "the market curve has scope 'all' only", "scope");
    return market_curve(state.market->params);
  }
  if (kind == CurveKind::traditional) {
    if (!state.traditional) throw RequestError(404, "traditional curve unavailable (no pick data)", "kind");
    if (scope.kind != Scope::Kind::all) throw RequestError(400, "the traditional curve has scope 'all' only", "scope");
    return *state.traditional;
  }
  const auto& post = posterior_for(state, scope);
  CurveEngine engine(post.samples, state.max_draws);
  if (state.cost) engine.set_cost_curve(*state.cost);
  return engine.curve(kind, r, scope);
}

std::string curve_model_hash(const ServiceState& state, CurveKind kind, Scope scope) {
  if (kind == CurveKind::market || kind == CurveKind::traditional) return "";
  return posterior_for(state, scope).model_hash;
}

CurveTable resolve_curve_table(const ServiceState& state, const CurveSpec& spec, Scope default_scope) {
  if (spec.is_johnson()) return johnson_table();
  const std::string id = curve_spec_string(spec);
  const Scope scope = spec.scope.value_or(default_scope);
  const CurveKind kind = *spec.kind;
  if (kind == CurveKind::market) {
    if (!state.market) throw RequestError(404, "no market fit loaded", "curves");
    return table_from_market(state.market->params, state.market->options.discounted, id);
  }
  if (kind == CurveKind::traditional) return table_from_curve(id, resolve_curve(state, kind, spec.r, scope));
  const auto& post = posterior_for(state, scope);
  CurveEngine engine(post.samples, state.max_draws);
  if (state.cost) engine.set_cost_curve(*state.cost);
  return table_from_engine(id, engine, kind, spec.r, scope);
}

HttpResponse handle_health() { return json_response(200, {{"status", "ok"}}); }

HttpResponse handle_meta(const ServiceState& state) {
  nlohmann::ordered_json j;
  j["api_version"] = "v1";
  auto models = nlohmann::ordered_json::array();
  for (const auto* p : {&state.agnostic, &state.hierarchical}) {
    if (!*p) continue;
    const auto& s = (*p)->samples;
    models.push_back({{"variant", std::string(variant_name(s.variant))},
                      {"model_hash", (*p)->model_hash},
                      {"draws", s.num_draws()},
                      {"chains", s.num_chains()},
                      {"parameters", s.dim()},
                      {"y_bust", s.settings.y_bust},
                      {"sampler", s.meta.sampler},
                      {"seed", s.meta.seed}});
  }
  j["models"] = std::move(models);
  j["market"] = state.market.has_value();
  j["cost_table"] = state.cost.has_value();
  j["config_hash"] = state.config_hash;
  auto kinds = nlohmann::ordered_json::array();
  for (CurveKind k : {CurveKind::performance, CurveKind::surplus, CurveKind::tail, CurveKind::surplus_tail,
                      CurveKind::traditional, CurveKind::market}) {
    kinds.push_back({{"kind", std::string(curve_kind_name(k))}, {"needs_r", kind_needs_threshold(k)}});
  }
  j["curve_kinds"] = std::move(kinds);
  j["scopes"] = {"all", "qb", "not_qb"};
  auto positions = nlohmann::ordered_json::array();
  for (auto label : kPositionLabels) positions.push_back(std::string(label));
  j["positions"] = std::move(positions);
  j["max_draws"] = state.max_draws;
  return json_response(200, j);
}

HttpResponse handle_market(const ServiceState& state) {
  return guarded([&] {
    if (!state.market) throw RequestError(404, "no market fit loaded");
    auto j = nlohmann::ordered_json::parse(market_fit_json(*state.market, state.config_hash));
    const PickCurve t = market_table(state.market->params);
    j["curve"] = std::vector<double>(t.begin(), t.end());
    return json_response(200, j);
  });
}

HttpResponse handle_curves(const ServiceState& state, const QueryParams& query) {
  return guarded([&] {
    const auto kit = query.find("kind");
    if (kit == query.end() || kit->second.empty()) throw RequestError(400, "missing 'kind'", "kind");
    const auto kind = parse_curve_kind(kit->second);
    if (!kind) throw RequestError(404, "unknown curve kind '" + kit->second + "'", "kind");
    std::optional<double> r;
    if (const auto it = query.find("r"); it != query.end() && !it->second.empty()) {
      try {
        std::size_t used = 0;
        r = std::stod(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw RequestError(400, "invalid threshold '" + it->second + "'", "r");
      }
    }
    if (kind_needs_threshold(*kind) && !r) throw RequestError(400, "curve kind needs a threshold 'r'", "r");
    if (!kind_needs_threshold(*kind)) r.reset();
    Scope scope = Scope::all();
    if (const auto it = query.find("scope"); it != query.end() && !it->second.empty()) {
      const auto s = parse_scope(it->second);
      if (!s) throw RequestError(400, "unknown scope '" + it->second + "'", "scope");
      scope = *s;
    }
    const ValueCurve c = resolve_curve(state, *kind, r, scope);
    const std::string model_hash = curve_model_hash(state, *kind, scope);
    const auto fit = query.find("format");
    if (fit != query.end() && fit->second == "csv") {
      return HttpResponse{200, curve_csv(c, {model_hash, state.config_hash}), "text/csv"};
    }
    if (fit != query.end() && fit->second != "json") throw RequestError(400, "format must be json or csv", "format");
    return json_response(200, curve_json(c, model_hash, state.config_hash));
  });
}

HttpResponse handle_evaluate(const ServiceState& state, std::string_view body) {
  return guarded([&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw RequestError(400, std::string("request body is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw RequestError(400, "request body must be a JSON object");
    TradeRecord trade;
    trade.down_bundle = parse_bundle(j, "down");
    trade.up_bundle = parse_bundle(j, "up");
    Scope scope = Scope::all();
    if (j.contains("scope")) {
      if (!j.at("scope").is_string()) throw RequestError(400, "'scope' must be a string", "scope");
      const auto s = parse_scope(j.at("scope").get<std::string>());
      if (!s) throw RequestError(400, "unknown scope", "scope");
      scope = *s;
    }
    if (!j.contains("curves") || !j.at("curves").is_array() || j.at("curves").empty()) {
      throw RequestError(400, "'curves' must be a non-empty array", "curves");
    }
    std::vector<CurveTable> tables;
    for (std::size_t i = 0; i < j.at("curves").size(); ++i) {
      const auto& c = j.at("curves")[i];
      const std::string field = "curves[" + std::to_string(i) + "]";
      if (!c.is_string()) throw RequestError(400, "curve ids must be strings", field);
      CurveSpec spec;
      try {
        spec = parse_curve_spec(c.get<std::string>());
      } catch (const std::invalid_argument& e) {
        throw RequestError(400, e.what(), field);
      }
      tables.push_back(resolve_curve_table(state, spec, scope));
    }
    return HttpResponse{200, evaluation_json(evaluate_trade(trade, tables)), "application/json"};
  });
}

struct HttpService::Impl {
  explicit Impl(const ServiceState& s) : state(s) {
    auto send = [](httplib::Response& res, const HttpResponse& r) {
      res.status = r.status;
      res.set_content(r.body, r.content_type);
    };
    server.Get("/v1/health", [send](const httplib::Request&, httplib::Response& res) { send(res, handle_health()); });
    server.Get("/v1/meta",
               [this, send](const httplib::Request&, httplib::Response& res) { send(res, handle_meta(state)); });
    server.Get("/v1/market",
               [this, send](const httplib::Request&, httplib::Response& res) { send(res, handle_market(state)); });
    server.Get("/v1/curves", [this, send](const httplib::Request& req, httplib::Response& res) {
      QueryParams q;
      for (const auto& [k, v] : req.params) q.emplace(k, v);
      send(res, handle_curves(state, q));
    });
    server.Post("/v1/trades/evaluate", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, handle_evaluate(state, req.body));
    });
  }

  const ServiceState& state;
  httplib::Server server;
  std::thread thread;
};

HttpService::HttpService(const ServiceState& state) : impl_(std::make_unique<Impl>(state)) {}

HttpService::~HttpService() { stop(); }

int HttpService::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw std::runtime_error("cannot bind " + host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port) + " (port in use?)");
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpService::run(const std::string& host, int port) {
  if (!impl_->server.bind_to_port(host, port)) {
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port) + " (port in use?)");
  }
  impl_->server.listen_after_bind();
}

void HttpService::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace draftval
