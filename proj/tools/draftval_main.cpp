#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "draftval/data_ingest.hpp"
#include "draftval/density_model.hpp"
#include "draftval/hash.hpp"
#include "draftval/inference.hpp"
#include "draftval/kernels.hpp"
#include "draftval/run_config.hpp"
#include "draftval/service.hpp"
#include "draftval/trade_eval.hpp"
#include "draftval/trade_market.hpp"
#include "draftval/value_curves.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace draftval;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNotConverged = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
}

// "42" or "42:1" (pick, years ahead), comma separated.
std::vector<BundlePick> parse_bundle_arg(const std::string& text, const std::string& flag) {
  std::vector<BundlePick> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    BundlePick b;
    const auto colon = item.find(':');
    try {
      std::size_t used = 0;
      b.pick_number = std::stoi(item.substr(0, colon), &used);
      if (used != item.substr(0, colon).size()) throw std::invalid_argument(item);
      if (colon != std::string::npos) {
        b.years_ahead = std::stoi(item.substr(colon + 1), &used);
        if (used != item.size() - colon - 1) throw std::invalid_argument(item);
      }
    } catch (const std::exception&) {
      throw UsageError(flag + ": cannot parse pick '" + item + "'");
    }
    out.push_back(b);
  }
  if (out.empty()) throw UsageError(flag + ": bundle is empty");
  return out;
}

std::string artifact_dir_default() {
  const char* env = std::getenv(kArtifactDirEnv);
  return env && *env ? env : "out";
}

struct FitArgs {
  std::string config_file;
  std::string picks = "data/picks.csv";
  std::string model = "agnostic";
  int chains = 4;
  int iters = 2500;
  int burnin = 1250;
  std::uint64_t seed = 1;
  std::string sampler = "hmc";
  int threads = 1;
  double y_bust = kDefaultYBust;
  bool normalize_tail = false;
  std::string out = "out";
};

RunConfig fit_config(const FitArgs& a, const CLI::App& sub) {
  RunConfig c;
  if (!a.config_file.empty()) {
    std::ifstream in(a.config_file);
    if (!in) throw DataError("cannot open config " + a.config_file);
    std::stringstream buf;
    buf << in.rdbuf();
    c = RunConfig::from_json(buf.str());
  }
  auto given = [&](const char* name) { return sub.count(name) > 0 || a.config_file.empty(); };
  if (given("--picks")) c.picks_path = a.picks;
  if (given("--model")) {
    const auto v = parse_variant(a.model);
    if (!v) throw UsageError("--model must be agnostic or hierarchical");
    c.variant = *v;
  }
  if (given("--chains")) c.sampler.chains = a.chains;
  if (given("--iters")) c.sampler.iterations = a.iters;
  if (given("--burnin")) c.sampler.burn_in = a.burnin;
  if (given("--seed")) c.sampler.seed = a.seed;
  if (given("--sampler")) {
    const auto k = parse_sampler(a.sampler);
    if (!k) throw UsageError("--sampler must be hmc or rwm");
    c.sampler.kind = *k;
  }
  if (given("--threads")) c.sampler.threads = a.threads;
  if (given("--y-bust")) c.settings.y_bust = a.y_bust;
  if (given("--normalize-tail")) c.settings.normalize_tail = a.normalize_tail;
  if (given("--out")) c.output_dir = a.out;
  c.validate();
  return c;
}

int cmd_fit(const RunConfig& cfg) {
  const auto picks = load_picks(cfg.picks_path);
  if (!picks.rejected.empty()) {
    std::fprintf(stderr, "fit: %zu rows rejected (non-modeled positions or picks past 256)\n", picks.rejected.size());
  }
  const DensityModel model(cfg.variant, picks.records, cfg.settings);
  const auto t0 = std::chrono::steady_clock::now();
  McmcResult res = run_mcmc(model, cfg.sampler);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  res.samples.meta.config_hash = cfg.hash();
  const FitReport report = make_fit_report(res, secs);

  const fs::path dir = cfg.output_dir;
  ensure_dir(dir);
  save_posterior(res.samples, dir / posterior_file_name(cfg.variant));
  write_text(dir / fit_report_file_name(cfg.variant), report.to_json() + "\n");
  write_text(dir / kRunConfigFile, cfg.to_json() + "\n");

  std::printf("parameter,map,rhat\n");
  for (std::size_t k = 0; k < report.names.size(); ++k) {
    if (report.rhat[k]) {
      std::printf("%s,%.6g,%.4f\n", report.names[k].c_str(), report.map_params[k], *report.rhat[k]);
    } else {
      std::printf("%s,%.6g,NA\n", report.names[k].c_str(), report.map_params[k]);
    }
  }
  std::fprintf(stderr, "fit: %s model, %zu draws, acceptance %.3f, %zu divergences, %.1fs, kernels %s\n",
               std::string(variant_name(cfg.variant)).c_str(), res.samples.num_draws(), res.samples.meta.acceptance,
               res.divergences, secs, report.kernels.c_str());
  if (res.divergence_flag) std::fprintf(stderr, "fit: warning: more than 10%% divergent transitions\n");
  if (!report.converged()) {
    std::fprintf(stderr, "fit: not converged (some R-hat >= 1.1 or undefined)\n");
    return kExitNotConverged;
  }
  return kExitOk;
}

struct CurvesArgs {
  std::string dir = artifact_dir_default();
  std::string out;
  std::string curves;
  std::string cost = "data/cost_table.csv";
  std::string picks = "data/picks.csv";
  std::size_t draws = 0;
};

int cmd_curves(const CurvesArgs& a) {
  RunConfig cfg;
  cfg.curves = parse_curve_specs(a.curves);
  cfg.cost_path = a.cost;
  cfg.picks_path = a.picks;
  cfg.curve_draws = a.draws;
  cfg.output_dir = a.out.empty() ? a.dir : a.out;
  for (const auto& c : cfg.curves) {
    if (c.is_johnson()) throw UsageError("--curves: the johnson chart is not a fitted curve");
  }
  cfg.validate();
  const fs::path out = cfg.output_dir;
  ensure_dir(out);

  std::optional<PickCurve> cost;
  std::optional<LoadedPosterior> post[2];
  for (const auto& spec : cfg.curves) {
    const CurveKind kind = *spec.kind;
    const Scope scope = spec.scope.value_or(Scope::all());
    ValueCurve curve;
    std::string model_hash;
    if (kind == CurveKind::traditional) {
      if (scope.kind != Scope::Kind::all) throw UsageError("the traditional curve has scope 'all' only");
      curve = traditional_mean_curve(load_picks(cfg.picks_path).records);
      model_hash = hex64(fnv1a(curve_spec_string(spec) + cfg.picks_path));
    } else if (kind == CurveKind::market) {
      const fs::path mf = fs::path(a.dir) / kMarketFitFile;
      if (!fs::exists(mf)) throw DataError("no market fit at " + mf.string() + " (run `market` first)");
      std::ifstream in(mf);
      std::stringstream buf;
      buf << in.rdbuf();
      curve = market_curve(market_fit_from_json(buf.str()).params);
      model_hash = hex64(fnv1a(buf.str()));
    } else {
      const Variant v = scope.kind == Scope::Kind::all ? Variant::agnostic : Variant::hierarchical;
      auto& slot = post[v == Variant::agnostic ? 0 : 1];
      if (!slot) slot = load_posterior_with_hash(fs::path(a.dir) / posterior_file_name(v), v);
      CurveEngine engine(slot->samples, cfg.curve_draws);
      if (kind == CurveKind::surplus || kind == CurveKind::surplus_tail) {
        if (!cost) cost = cost_curve(load_cost_table(cfg.cost_path));
        engine.set_cost_curve(*cost);
      }
      curve = engine.curve(kind, spec.r, scope);
      model_hash = slot->model_hash;
    }
    const fs::path file = out / curve_file_name(kind, spec.r, scope);
    write_text(file, curve_csv(curve, {model_hash, cfg.hash()}));
    std::printf("%s\n", file.string().c_str());
  }
  return kExitOk;
}

struct MarketArgs {
  std::string trades = "data/trades.csv";
  std::string mode = "paper-form";
  bool discounted = false;
  std::string future = "drop";
  std::string dir = artifact_dir_default();
  std::string out;
  bool threshold = false;
  std::string mae = "uniform";
  double grid_min = 0.05, grid_max = 0.35, grid_step = 0.001;
  std::size_t threshold_draws = 200;
};

int cmd_market(const MarketArgs& a) {
  RunConfig cfg;
  cfg.trades_path = a.trades;
  const auto mode = parse_placement(a.mode);
  if (!mode) throw UsageError("--mode must be paper-form or corrected-form");
  cfg.market_mode = *mode;
  cfg.market_discounted = a.discounted;
  const auto fut = parse_future_policy(a.future);
  if (!fut) throw UsageError("--future-picks must be drop or face-value");
  cfg.future_picks = *fut;
  const auto mae = parse_mae_weights(a.mae);
  if (!mae) throw UsageError("--mae-weights must be uniform or round1");
  cfg.mae_weights = *mae;
  cfg.r_grid_min = a.grid_min;
  cfg.r_grid_max = a.grid_max;
  cfg.r_grid_step = a.grid_step;
  cfg.threshold_draws = a.threshold_draws;
  cfg.output_dir = a.out.empty() ? a.dir : a.out;
  cfg.validate();

  MarketFitOptions opt;
  opt.mode = cfg.market_mode;
  opt.discounted = cfg.market_discounted;
  opt.future = cfg.future_picks;
  const auto trades = load_trades(cfg.trades_path);
  const MarketFit fit = fit_market(trades, opt);
  const std::string json = market_fit_json(fit, cfg.hash());
  const fs::path out = cfg.output_dir;
  ensure_dir(out);
  write_text(out / kMarketFitFile, json + "\n");
  write_text(out / curve_file_name(CurveKind::market, std::nullopt, Scope::all()),
             curve_csv(market_curve(fit.params), {hex64(fnv1a(json)), cfg.hash()}));
  std::printf("%s\n", json.c_str());

  if (a.threshold) {
    const auto loaded = load_posterior_with_hash(fs::path(a.dir) / posterior_file_name(Variant::agnostic),
                                                 Variant::agnostic);
    const CurveEngine engine(loaded.samples, cfg.threshold_draws);
    const auto grid = cfg.threshold_grid();
    const ThresholdMatch m = best_matching_threshold(engine, fit.params, grid, cfg.mae_weights);
    nlohmann::ordered_json j;
    j["r_star"] = m.r_star;
    j["mae"] = m.mae;
    j["mae_weights"] = std::string(mae_weights_name(cfg.mae_weights));
    j["grid"] = {{"min", cfg.r_grid_min}, {"max", cfg.r_grid_max}, {"step", cfg.r_grid_step}};
    j["draws"] = engine.num_draws();
    j["model_hash"] = loaded.model_hash;
    j["config_hash"] = cfg.hash();
    write_text(out / "threshold_match.json", j.dump(2) + "\n");
    std::printf("r_star=%.6g mae=%.6g\n", m.r_star, m.mae);
  }
  return kExitOk;
}

struct EvaluateArgs {
  std::string down;
  std::string up;
  std::string curves = "market,surplus,tail:0.178";
  std::string scope = "all";
  std::string dir = artifact_dir_default();
  std::string cost;
  std::size_t draws = 1000;
};

int cmd_evaluate(const EvaluateArgs& a) {
  TradeRecord trade;
  trade.down_bundle = parse_bundle_arg(a.down, "--down");
  trade.up_bundle = parse_bundle_arg(a.up, "--up");
  const auto scope = parse_scope(a.scope);
  if (!scope) throw UsageError("--scope: unknown scope '" + a.scope + "'");
  const auto specs = parse_curve_specs(a.curves);

  ServiceState state;
  state.max_draws = a.draws;
  bool need_posterior = false;
  for (const auto& s : specs) {
    if (!s.is_johnson() && *s.kind != CurveKind::market && *s.kind != CurveKind::traditional) need_posterior = true;
  }
  if (need_posterior || fs::exists(fs::path(a.dir) / kMarketFitFile)) {
    std::optional<fs::path> cost;
    if (!a.cost.empty()) cost = a.cost;
    if (need_posterior) {
      state = load_service_state(a.dir, cost, std::nullopt, a.draws);
    } else {
      std::ifstream in(fs::path(a.dir) / kMarketFitFile);
      std::stringstream buf;
      buf << in.rdbuf();
      state.market = market_fit_from_json(buf.str());
    }
  }
  std::vector<CurveTable> tables;
  for (const auto& s : specs) tables.push_back(resolve_curve_table(state, s, *scope));
  std::printf("%s\n", evaluation_json(evaluate_trade(trade, tables)).c_str());
  return kExitOk;
}

struct ServeArgs {
  std::string dir = artifact_dir_default();
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string cost;
  std::string picks;
  std::size_t draws = 1000;
};

int cmd_serve(const ServeArgs& a) {
  std::optional<fs::path> cost, picks;
  if (!a.cost.empty()) cost = a.cost;
  if (!a.picks.empty()) picks = a.picks;
  const ServiceState state = load_service_state(a.dir, cost, picks, a.draws);
  HttpService service(state);
  std::fprintf(stderr, "serve: listening on http://%s:%d/v1 (artifacts from %s)\n", a.host.c_str(), a.port,
               a.dir.c_str());
  service.run(a.host, a.port);
  return kExitOk;
}

int cmd_moments(const std::string& picks_path, const std::string& filter, double cutoff) {
  BustFilter f = BustFilter::none;
  if (filter == "above") {
    f = BustFilter::above_cutoff;
  } else if (filter == "at_or_below") {
    f = BustFilter::at_or_below_cutoff;
  } else if (filter != "none") {
    throw UsageError("--filter must be none, above or at_or_below");
  }
  const auto picks = load_picks(picks_path);
  std::printf("pick,count,mean,sd\n");
  for (const auto& [pick, m] : empirical_moments(picks.records, f, cutoff)) {
    if (m.sd) {
      std::printf("%d,%zu,%.12g,%.12g\n", pick, m.count, m.mean, *m.sd);
    } else {
      std::printf("%d,%zu,%.12g,\n", pick, m.count, m.mean);
    }
  }
  return kExitOk;
}

int cmd_cost(const std::string& path) {
  const PickCurve c = cost_curve(load_cost_table(path));
  std::printf("pick,cost\n");
  for (std::size_t i = 0; i < c.size(); ++i) std::printf("%zu,%.12g\n", i + 1, c[i]);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Draft pick valuation: fit outcome models, emit value curves, fit the trade market, evaluate trades"};
  app.require_subcommand(1);

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit a model by MCMC and write the posterior artifact and fit report");
  fit->add_option("--config", fa.config_file, "RunConfig JSON; flags given explicitly override it");
  fit->add_option("--picks", fa.picks, "Pick outcomes CSV");
  fit->add_option("--model", fa.model, "agnostic | hierarchical");
  fit->add_option("--chains", fa.chains, "Number of chains");
  fit->add_option("--iters", fa.iters, "Iterations per chain, including burn-in");
  fit->add_option("--burnin", fa.burnin, "Burn-in iterations per chain");
  fit->add_option("--seed", fa.seed, "RNG seed");
  fit->add_option("--sampler", fa.sampler, "hmc | rwm");
  fit->add_option("--threads", fa.threads, "Worker threads for chains");
  fit->add_option("--y-bust", fa.y_bust, "Bust cutoff as a cap fraction");
  fit->add_flag("--normalize-tail", fa.normalize_tail, "Renormalize the Beta component above the cutoff");
  fit->add_option("--out", fa.out, "Output directory");

  CurvesArgs ca;
  auto* curves = app.add_subcommand("curves", "Write value curve CSV tables from fitted artifacts");
  curves->add_option("--artifact-dir", ca.dir, "Directory holding posterior artifacts");
  curves->add_option("--out", ca.out, "Output directory (defaults to the artifact directory)");
  curves->add_option("--curves", ca.curves, "Comma-separated kind[:r][@scope], e.g. surplus,tail:0.197@qb")
      ->required();
  curves->add_option("--cost", ca.cost, "Rookie cost table CSV (surplus curves)");
  curves->add_option("--picks", ca.picks, "Pick outcomes CSV (traditional curve)");
  curves->add_option("--draws", ca.draws, "Use at most this many posterior draws (0 = all)");

  MarketArgs ma;
  auto* market = app.add_subcommand("market", "Fit the Weibull trade-market curve");
  market->add_option("--trades", ma.trades, "Trade ledger CSV");
  market->add_option("--mode", ma.mode, "paper-form | corrected-form");
  market->add_flag("--discounted", ma.discounted, "Fit a discount rate for future picks");
  market->add_option("--future-picks", ma.future, "Non-discounted handling of future picks: drop | face-value");
  market->add_option("--artifact-dir", ma.dir, "Directory with the agnostic posterior (for --threshold)");
  market->add_option("--out", ma.out, "Output directory (defaults to the artifact directory)");
  market->add_flag("--threshold", ma.threshold, "Also find the tail threshold that best matches the market");
  market->add_option("--mae-weights", ma.mae, "uniform | round1");
  market->add_option("--grid-min", ma.grid_min, "Smallest threshold in the search grid");
  market->add_option("--grid-max", ma.grid_max, "Largest threshold in the search grid");
  market->add_option("--grid-step", ma.grid_step, "Threshold grid spacing");
  market->add_option("--threshold-draws", ma.threshold_draws, "Posterior draws used for threshold matching");

  EvaluateArgs ea;
  auto* evaluate = app.add_subcommand("evaluate", "Value a trade under several curves");
  evaluate->add_option("--down", ea.down, "Picks given by the team trading down, e.g. 3 or 40,71:1")->required();
  evaluate->add_option("--up", ea.up, "Picks given by the team trading up, e.g. 12,42")->required();
  evaluate->add_option("--curves", ea.curves, "Comma-separated curve ids: johnson, market, kind[:r][@scope]");
  evaluate->add_option("--scope,--pos-scope", ea.scope, "Default scope for posterior curves");
  evaluate->add_option("--artifact-dir", ea.dir, "Directory holding artifacts");
  evaluate->add_option("--cost", ea.cost, "Rookie cost table CSV (surplus curves)");
  evaluate->add_option("--draws", ea.draws, "Use at most this many posterior draws");

  ServeArgs sa;
  auto* serve = app.add_subcommand("serve", "Serve the /v1 JSON API over loaded artifacts");
  serve->add_option("--artifact-dir", sa.dir, std::string("Artifact directory (default $") + kArtifactDirEnv + " or out)");
  serve->add_option("--host", sa.host, "Bind address");
  serve->add_option("--port", sa.port, "Port");
  serve->add_option("--cost", sa.cost, "Rookie cost table CSV");
  serve->add_option("--picks", sa.picks, "Pick outcomes CSV (traditional curve)");
  serve->add_option("--draws", sa.draws, "Use at most this many posterior draws per curve");

  std::string mpicks = "data/picks.csv", mfilter = "none";
  double mcut = kDefaultYBust;
  auto* moments = app.add_subcommand("moments", "Per-pick empirical mean and sd of outcomes");
  moments->add_option("--picks", mpicks, "Pick outcomes CSV");
  moments->add_option("--filter", mfilter, "none | above | at_or_below (relative to the cutoff)");
  moments->add_option("--cutoff", mcut, "Bust cutoff");

  std::string cpath = "data/cost_table.csv";
  auto* cost = app.add_subcommand("cost", "Rookie cost curve as a cap fraction per pick");
  cost->add_option("--cost", cpath, "Rookie cost table CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (fit->parsed()) return cmd_fit(fit_config(fa, *fit));
    if (curves->parsed()) return cmd_curves(ca);
    if (market->parsed()) return cmd_market(ma);
    if (evaluate->parsed()) return cmd_evaluate(ea);
    if (serve->parsed()) return cmd_serve(sa);
    if (moments->parsed()) return cmd_moments(mpicks, mfilter, mcut);
    if (cost->parsed()) return cmd_cost(cpath);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "draftval: error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
