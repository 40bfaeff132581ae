#include "draftval/run_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "draftval/hash.hpp"
#include "json.hpp"

namespace draftval {

namespace {

std::string format_r(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", r);
  return buf;
}

double parse_number(std::string_view s, const std::string& what) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) {
    throw std::invalid_argument("invalid " + what + ": '" + std::string(s) + "'");
  }
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument("invalid config: " + message);
}

}  // namespace

CurveSpec parse_curve_spec(std::string_view text) {
  text = trim(text);
  CurveSpec spec;
  std::string_view body = text;
  if (const auto at = text.find('@'); at != std::string_view::npos) {
    const auto scope = parse_scope(text.substr(at + 1));
    if (!scope) throw std::invalid_argument("unknown scope in curve spec '" + std::string(text) + "'");
    spec.scope = *scope;
    body = text.substr(0, at);
  }
  std::string_view name = body;
  if (const auto colon = body.find(':'); colon != std::string_view::npos) {
    name = body.substr(0, colon);
    spec.r = parse_number(body.substr(colon + 1), "threshold in curve spec '" + std::string(text) + "'");
  }
  if (name == "johnson") {
    if (spec.r || spec.scope) throw std::invalid_argument("the johnson chart takes no threshold or scope");
    return spec;
  }
  const auto kind = parse_curve_kind(name);
  if (!kind) throw std::invalid_argument("unknown curve kind '" + std::string(name) + "'");
  spec.kind = *kind;
  if (kind_needs_threshold(*kind) && !spec.r) {
    throw std::invalid_argument("curve kind '" + std::string(name) + "' needs a threshold, e.g. " + std::string(name) +
                                ":0.2");
  }
  if (!kind_needs_threshold(*kind) && spec.r) {
    throw std::invalid_argument("curve kind '" + std::string(name) + "' takes no threshold");
  }
  return spec;
}

std::string curve_spec_string(const CurveSpec& s) {
  if (s.is_johnson()) return "johnson";
  std::string out(curve_kind_name(*s.kind));
  if (s.r) out += ":" + format_r(*s.r);
  if (s.scope) out += "@" + scope_name(*s.scope);
  return out;
}

std::vector<CurveSpec> parse_curve_specs(std::string_view text) {
  std::vector<CurveSpec> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto item = trim(text.substr(0, comma));
    if (item.empty()) throw std::invalid_argument("empty entry in curve list");
    out.push_back(parse_curve_spec(item));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (out.empty()) throw std::invalid_argument("empty curve list");
  return out;
}

std::string curve_file_name(CurveKind kind, std::optional<double> r, Scope scope) {
  std::string out = "curve_" + std::string(curve_kind_name(kind));
  if (r && kind_needs_threshold(kind)) out += "_r" + format_r(*r);
  out += "_" + scope_name(scope) + ".csv";
  return out;
}

void RunConfig::validate() const {
  require(!picks_path.empty(), "picks path is empty");
  require(std::isfinite(settings.y_bust) && settings.y_bust > 0.0 && settings.y_bust < 1.0,
          "y_bust must lie in (0, 1)");
  require(sampler.chains >= 1, "chains must be >= 1");
  require(sampler.iterations >= 2, "iterations must be >= 2");
  require(sampler.burn_in >= 0 && sampler.burn_in < sampler.iterations, "burn-in must lie in [0, iterations)");
  require(sampler.threads >= 1, "threads must be >= 1");
  require(sampler.target_accept > 0.0 && sampler.target_accept < 1.0, "target acceptance must lie in (0, 1)");
  for (const auto& c : curves) {
    require(!c.is_johnson(), "the johnson chart is not a fitted curve");
    if (c.r) {
      require(*c.r >= settings.y_bust && *c.r < 1.0,
              "threshold " + format_r(*c.r) + " must lie in [y_bust, 1)");
    }
  }
  require(std::isfinite(r_grid_min) && std::isfinite(r_grid_max) && std::isfinite(r_grid_step),
          "threshold grid must be finite");
  require(r_grid_step > 0.0, "threshold grid step must be positive");
  require(r_grid_min >= settings.y_bust && r_grid_min <= r_grid_max && r_grid_max < 1.0,
          "threshold grid must satisfy y_bust <= min <= max < 1");
  require(!output_dir.empty(), "output directory is empty");
}

std::vector<double> RunConfig::threshold_grid() const {
  std::vector<double> grid;
  const auto n = static_cast<long>(std::floor((r_grid_max - r_grid_min) / r_grid_step + 1e-9));
  for (long i = 0; i <= n; ++i) {
    // Round to 12 significant digits so grid points print as entered.
    const double r = std::stod(format_r(r_grid_min + static_cast<double>(i) * r_grid_step));
    grid.push_back(r);
  }
  return grid;
}

namespace {

nlohmann::ordered_json numeric_fields(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["variant"] = std::string(variant_name(c.variant));
  j["y_bust"] = c.settings.y_bust;
  j["normalize_tail"] = c.settings.normalize_tail;
  j["sampler"] = {{"kind", std::string(sampler_name(c.sampler.kind))},
                  {"chains", c.sampler.chains},
                  {"iterations", c.sampler.iterations},
                  {"burn_in", c.sampler.burn_in},
                  {"seed", c.sampler.seed},
                  {"target_accept", c.sampler.target_accept},
                  {"integration_time", c.sampler.integration_time},
                  {"max_leapfrog", c.sampler.max_leapfrog},
                  {"init_jitter", c.sampler.init_jitter}};
  auto curves = nlohmann::ordered_json::array();
  for (const auto& s : c.curves) curves.push_back(curve_spec_string(s));
  j["curves"] = curves;
  j["curve_draws"] = c.curve_draws;
  j["market"] = {{"mode", std::string(placement_name(c.market_mode))},
                 {"discounted", c.market_discounted},
                 {"future_picks", std::string(future_policy_name(c.future_picks))}};
  j["threshold"] = {{"mae_weights", std::string(mae_weights_name(c.mae_weights))},
                    {"grid_min", c.r_grid_min},
                    {"grid_max", c.r_grid_max},
                    {"grid_step", c.r_grid_step},
                    {"draws", c.threshold_draws}};
  return j;
}

}  // namespace

std::string RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["data"] = {{"picks", picks_path}, {"trades", trades_path}, {"cost", cost_path}};
  const auto fields = numeric_fields(*this);
  for (auto it = fields.begin(); it != fields.end(); ++it) j[it.key()] = it.value();
  j["sampler"]["threads"] = sampler.threads;
  j["output_dir"] = output_dir;
  j["config_hash"] = hash();
  return j.dump(2);
}

RunConfig RunConfig::from_json(std::string_view text) {
  RunConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.contains("data")) {
      const auto& d = j.at("data");
      c.picks_path = d.value("picks", c.picks_path);
      c.trades_path = d.value("trades", c.trades_path);
      c.cost_path = d.value("cost", c.cost_path);
    }
    if (j.contains("variant")) {
      const auto v = parse_variant(j.at("variant").get<std::string>());
      if (!v) throw std::invalid_argument("invalid config: unknown variant");
      c.variant = *v;
    }
    c.settings.y_bust = j.value("y_bust", c.settings.y_bust);
    c.settings.normalize_tail = j.value("normalize_tail", c.settings.normalize_tail);
    if (j.contains("sampler")) {
      const auto& s = j.at("sampler");
      if (s.contains("kind")) {
        const auto k = parse_sampler(s.at("kind").get<std::string>());
        if (!k) throw std::invalid_argument("invalid config: unknown sampler");
        c.sampler.kind = *k;
      }
      c.sampler.chains = s.value("chains", c.sampler.chains);
      c.sampler.iterations = s.value("iterations", c.sampler.iterations);
      c.sampler.burn_in = s.value("burn_in", c.sampler.burn_in);
      c.sampler.seed = s.value("seed", c.sampler.seed);
      c.sampler.target_accept = s.value("target_accept", c.sampler.target_accept);
      c.sampler.integration_time = s.value("integration_time", c.sampler.integration_time);
      c.sampler.max_leapfrog = s.value("max_leapfrog", c.sampler.max_leapfrog);
      c.sampler.init_jitter = s.value("init_jitter", c.sampler.init_jitter);
      c.sampler.threads = s.value("threads", c.sampler.threads);
    }
    if (j.contains("curves")) {
      for (const auto& s : j.at("curves")) c.curves.push_back(parse_curve_spec(s.get<std::string>()));
    }
    c.curve_draws = j.value("curve_draws", c.curve_draws);
    if (j.contains("market")) {
      const auto& m = j.at("market");
      if (m.contains("mode")) {
        const auto p = parse_placement(m.at("mode").get<std::string>());
        if (!p) throw std::invalid_argument("invalid config: unknown market mode");
        c.market_mode = *p;
      }
      c.market_discounted = m.value("discounted", c.market_discounted);
      if (m.contains("future_picks")) {
        const auto f = parse_future_policy(m.at("future_picks").get<std::string>());
        if (!f) throw std::invalid_argument("invalid config: unknown future pick policy");
        c.future_picks = *f;
      }
    }
    if (j.contains("threshold")) {
      const auto& t = j.at("threshold");
      if (t.contains("mae_weights")) {
        const auto w = parse_mae_weights(t.at("mae_weights").get<std::string>());
        if (!w) throw std::invalid_argument("invalid config: unknown MAE weighting");
        c.mae_weights = *w;
      }
      c.r_grid_min = t.value("grid_min", c.r_grid_min);
      c.r_grid_max = t.value("grid_max", c.r_grid_max);
      c.r_grid_step = t.value("grid_step", c.r_grid_step);
      c.threshold_draws = t.value("draws", c.threshold_draws);
    }
    c.output_dir = j.value("output_dir", c.output_dir);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("invalid config JSON: ") + e.what());
  }
  c.validate();
  return c;
}

std::string RunConfig::hash() const { return hex64(fnv1a(numeric_fields(*this).dump())); }

}  // namespace draftval
