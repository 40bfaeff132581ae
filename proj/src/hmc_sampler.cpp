#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

#include "draftval/hash.hpp"
#include "draftval/inference.hpp"

namespace draftval {

std::string_view sampler_name(SamplerKind k) { return k == SamplerKind::hmc ? "hmc" : "rwm"; }

std::optional<SamplerKind> parse_sampler(std::string_view name) {
  if (name == "hmc") return SamplerKind::hmc;
  if (name == "rwm") return SamplerKind::rwm;
  return std::nullopt;
}

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

constexpr double kDivergenceThreshold = 1000.0;

// Metric adaptation windows inside the burn-in: a fast initial buffer, slow
// windows that double in length, and a terminal buffer for the step size.
struct WarmupPlan {
  int window_start = 0;
  int window_stop = 0;
  std::vector<int> window_ends;
};

WarmupPlan plan_warmup(int burn_in) {
  WarmupPlan plan;
  if (burn_in < 20) return plan;
  int init = 75, term = 50, base = 25;
  if (burn_in < 150) {
    init = static_cast<int>(0.15 * burn_in);
    term = static_cast<int>(0.1 * burn_in);
    base = burn_in - init - term;
  }
  plan.window_start = init;
  plan.window_stop = burn_in - term;
  int start = init, size = base;
  while (start < plan.window_stop) {
    int end = start + size;
    if (end + 2 * size > plan.window_stop) end = plan.window_stop;
    plan.window_ends.push_back(end);
    start = end;
    size *= 2;
  }
  return plan;
}

// Step-size dual averaging.
struct DualAveraging {
  double mu = 0.0, h_bar = 0.0, log_eps_bar = 0.0, target = 0.8;
  int m = 0;
  static constexpr double gamma = 0.05, t0 = 10.0, kappa = 0.75;

  // HMC biases exploration toward larger steps; random-walk proposals do not.
  void restart(double eps, double bias) {
    mu = std::log(bias * eps);
    h_bar = 0.0;
    log_eps_bar = 0.0;
    m = 0;
  }
  double update(double accept_stat) {
    ++m;
    const double w = 1.0 / (m + t0);
    h_bar = (1.0 - w) * h_bar + w * (target - accept_stat);
    const double log_eps = mu - std::sqrt(static_cast<double>(m)) / gamma * h_bar;
    const double eta = std::pow(static_cast<double>(m), -kappa);
    log_eps_bar = eta * log_eps + (1.0 - eta) * log_eps_bar;
    return std::exp(log_eps);
  }
  double final_step() const { return std::exp(log_eps_bar); }
};

// Running mean and covariance.
struct Welford {
  Vec mean;
  Mat m2;
  int n = 0;
  explicit Welford(Eigen::Index d) : mean(Vec::Zero(d)), m2(Mat::Zero(d, d)) {}
  void add(const Vec& x) {
    ++n;
    const Vec delta = x - mean;
    mean += delta / n;
    m2 += delta * (x - mean).transpose();
  }
  void reset() {
    mean.setZero();
    m2.setZero();
    n = 0;
  }
};

class Chain {
 public:
  Chain(const GradObjective& logp, const SamplerConfig& cfg, const Mat& cov, std::uint64_t chain_index)
      : logp_(logp), cfg_(cfg), dim_(cov.rows()), grad_(dim_), buf_(static_cast<std::size_t>(dim_)),
        gbuf_(static_cast<std::size_t>(dim_)) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(chain_index), static_cast<std::uint32_t>(chain_index >> 32)};
    rng_.seed(seq);
    set_metric(cov);
  }

  void set_metric(const Mat& cov) {
    cov_ = 0.5 * (cov + cov.transpose());
    Eigen::LLT<Mat> llt(cov_);
    if (llt.info() != Eigen::Success) {
      Mat diag = cov_.diagonal().cwiseMax(1e-300).asDiagonal();
      chol_ = diag.cwiseSqrt();
      cov_ = diag;
    } else {
      chol_ = llt.matrixL();
    }
  }

  double eval(const Vec& u, Vec& g) {
    std::copy(u.data(), u.data() + dim_, buf_.begin());
    const double v = logp_(buf_, gbuf_);
    std::copy(gbuf_.begin(), gbuf_.end(), g.data());
    return std::isfinite(v) && g.allFinite() ? v : -std::numeric_limits<double>::infinity();
  }

  Vec normal_vec() {
    Vec z(dim_);
    for (Eigen::Index i = 0; i < dim_; ++i) z(i) = normal_(rng_);
    return z;
  }

  double uniform() { return uniform_(rng_); }

  void initialize(std::span<const double> center) {
    const Vec c = Eigen::Map<const Vec>(center.data(), dim_);
    double spread = cfg_.init_jitter;
    for (int attempt = 0; attempt < 30; ++attempt) {
      u_ = c + spread * (chol_ * normal_vec());
      lp_ = eval(u_, grad_);
      if (std::isfinite(lp_)) return;
      spread *= 0.5;
    }
    u_ = c;
    lp_ = eval(u_, grad_);
    if (!std::isfinite(lp_)) throw std::invalid_argument("sampler: log density not finite at the start point");
  }

  struct Step {
    double accept_stat = 0.0;
    bool accepted = false;
    bool divergent = false;
  };

  Step hmc_step(double eps, int n_steps) {
    Vec p = normal_vec();
    Vec u = u_, g = grad_;
    double lp = lp_;
    const double h0 = -lp + 0.5 * p.squaredNorm();
    bool finite = true;
    for (int s = 0; s < n_steps; ++s) {
      p += 0.5 * eps * (chol_.transpose() * g);
      u += eps * (chol_ * p);
      lp = eval(u, g);
      if (!std::isfinite(lp)) {
        finite = false;
        break;
      }
      p += 0.5 * eps * (chol_.transpose() * g);
    }
    Step st;
    const double h1 = finite ? -lp + 0.5 * p.squaredNorm() : std::numeric_limits<double>::infinity();
    st.divergent = !std::isfinite(h1) || h1 - h0 > kDivergenceThreshold;
    st.accept_stat = st.divergent ? 0.0 : std::min(1.0, std::exp(h0 - h1));
    if (!st.divergent && uniform() < st.accept_stat) {
      u_ = u;
      grad_ = g;
      lp_ = lp;
      st.accepted = true;
    }
    return st;
  }

  Step rwm_step(double scale) {
    Vec u = u_ + scale * (chol_ * normal_vec());
    Vec g(dim_);
    const double lp = eval(u, g);
    Step st;
    st.accept_stat = std::isfinite(lp) ? std::min(1.0, std::exp(lp - lp_)) : 0.0;
    if (uniform() < st.accept_stat) {
      u_ = u;
      grad_ = g;
      lp_ = lp;
      st.accepted = true;
    }
    return st;
  }

  // Doubles or halves the step until the one-step acceptance crosses 1/2.
  double reasonable_step() {
    double eps = 1.0;
    auto log_ratio = [&](double e) {
      Vec p = normal_vec();
      Vec g = grad_;
      Vec u = u_;
      const double h0 = -lp_ + 0.5 * p.squaredNorm();
      p += 0.5 * e * (chol_.transpose() * g);
      u += e * (chol_ * p);
      const double lp = eval(u, g);
      if (!std::isfinite(lp)) return -std::numeric_limits<double>::infinity();
      p += 0.5 * e * (chol_.transpose() * g);
      return h0 - (-lp + 0.5 * p.squaredNorm());
    };
    double a = log_ratio(eps);
    const double dir = a > std::log(0.5) ? 1.0 : -1.0;
    for (int it = 0; it < 60; ++it) {
      if (!(dir * a > dir * std::log(0.5))) break;
      const double next = eps * std::pow(2.0, dir);
      if (next < 1e-10 || next > 1e3) break;
      eps = next;
      a = log_ratio(eps);
    }
    return eps;
  }

  int leapfrog_count(double eps) {
    const double ratio = cfg_.integration_time / eps;
    const int lmax = static_cast<int>(std::clamp(std::ceil(ratio), 1.0, static_cast<double>(cfg_.max_leapfrog)));
    std::uniform_int_distribution<int> pick((lmax + 1) / 2, lmax);
    return pick(rng_);
  }

  const Vec& position() const { return u_; }
  const Mat& cov() const { return cov_; }
  Eigen::Index dim() const { return dim_; }

 private:
  const GradObjective& logp_;
  const SamplerConfig& cfg_;
  Eigen::Index dim_;
  Mat cov_, chol_;
  Vec u_, grad_;
  double lp_ = 0.0;
  std::vector<double> buf_, gbuf_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace

ChainResult sample_chain(const GradObjective& logp, std::span<const double> center, const Eigen::MatrixXd& cov,
                         const SamplerConfig& config, std::uint64_t chain_index) {
  if (config.iterations <= config.burn_in || config.burn_in < 0) {
    throw std::invalid_argument("sampler: iterations must exceed burn_in >= 0");
  }
  if (static_cast<Eigen::Index>(center.size()) != cov.rows() || cov.rows() != cov.cols()) {
    throw std::invalid_argument("sampler: dimension mismatch between start point and metric");
  }
  Chain chain(logp, config, cov, chain_index);
  chain.initialize(center);

  const bool hmc = config.kind == SamplerKind::hmc;
  const double target = hmc ? config.target_accept : 0.234;
  const WarmupPlan plan = plan_warmup(config.burn_in);
  const Eigen::Index d = chain.dim();
  Welford acc(d);
  std::size_t next_window = 0;

  DualAveraging da;
  da.target = target;
  const double bias = hmc ? 10.0 : 1.0;
  double eps = hmc ? chain.reasonable_step() : 2.38 / std::sqrt(static_cast<double>(d));
  da.restart(eps, bias);

  ChainResult out;
  const int kept = config.iterations - config.burn_in;
  out.draws.reserve(static_cast<std::size_t>(kept) * static_cast<std::size_t>(d));
  double accept_sum = 0.0;

  for (int it = 0; it < config.iterations; ++it) {
    const bool warm = it < config.burn_in;
    Chain::Step st = hmc ? chain.hmc_step(eps, chain.leapfrog_count(eps)) : chain.rwm_step(eps);
    if (warm) {
      eps = da.update(st.accept_stat);
      if (it >= plan.window_start && it < plan.window_stop) acc.add(chain.position());
      if (next_window < plan.window_ends.size() && it + 1 == plan.window_ends[next_window]) {
        ++next_window;
        // Shrink the sample covariance toward the current metric; the weight
        // grows with the window length relative to the dimension.
        const double n = acc.n;
        if (n >= 3) {
          const Mat sample = acc.m2 / (n - 1.0);
          const double w = n / (n + static_cast<double>(d));
          chain.set_metric(w * sample + (1.0 - w) * chain.cov());
        }
        acc.reset();
        eps = hmc ? chain.reasonable_step() : da.final_step();
        da.restart(eps, bias);
      }
      if (it + 1 == config.burn_in) eps = da.final_step();
      continue;
    }
    accept_sum += st.accept_stat;
    if (st.divergent) ++out.divergences;
    if (!st.accepted) ++out.rejections;
    const Vec& u = chain.position();
    out.draws.insert(out.draws.end(), u.data(), u.data() + d);
  }
  out.acceptance = accept_sum / kept;
  out.step_size = eps;
  return out;
}

McmcResult run_mcmc(const DensityModel& model, const SamplerConfig& config) {
  if (config.chains < 1) throw std::invalid_argument("sampler: chains must be >= 1");
  if (config.iterations <= config.burn_in || config.burn_in < 0) {
    throw std::invalid_argument("sampler: iterations must exceed burn_in >= 0");
  }
  McmcResult res;
  // The sampler space may differ from the caller's (hierarchical centring).
  DensityModel work = model;
  if (model.variant() == Variant::hierarchical) {
    const HierarchicalStart start = hierarchical_start(model);
    work.set_centring(start.centring);
    res.centring = start.centring;
    res.map.params = start.theta;
    res.map.log_posterior = model.log_posterior(start.theta);
    res.map.status = "pooled moment start";
  } else {
    res.map = fit_map(model);
  }
  std::vector<double> u_map(work.dim());
  work.to_unconstrained(res.map.params, u_map);
  res.map.sampler_log_density = work.log_density_unconstrained(u_map);
  const GradObjective logp = [&work](std::span<const double> u, std::span<double> g) {
    return work.log_density_unconstrained(u, g);
  };
  const Eigen::MatrixXd cov = laplace_covariance(logp, u_map);

  res.chains.resize(static_cast<std::size_t>(config.chains));
  const int threads = std::max(1, std::min(config.threads, config.chains));
  if (threads == 1) {
    for (int c = 0; c < config.chains; ++c) {
      res.chains[static_cast<std::size_t>(c)] = sample_chain(logp, u_map, cov, config, static_cast<std::uint64_t>(c));
    }
  } else {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(config.chains));
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (int c = t; c < config.chains; c += threads) {
          try {
            res.chains[static_cast<std::size_t>(c)] =
                sample_chain(logp, u_map, cov, config, static_cast<std::uint64_t>(c));
          } catch (...) {
            errors[static_cast<std::size_t>(c)] = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  PosteriorSamples& s = res.samples;
  s.variant = model.variant();
  s.settings = model.settings();
  s.names = param_names(model.variant());
  const std::size_t d = model.dim();
  const std::size_t kept = static_cast<std::size_t>(config.iterations - config.burn_in);
  s.draws.resize(static_cast<std::size_t>(config.chains) * kept * d);
  s.chain_offsets.push_back(0);
  double accept = 0.0;
  for (std::size_t c = 0; c < res.chains.size(); ++c) {
    ChainResult& ch = res.chains[c];
    for (std::size_t i = 0; i < kept; ++i) {
      const std::span<const double> u(ch.draws.data() + i * d, d);
      work.from_unconstrained(u, std::span<double>(s.draws.data() + (c * kept + i) * d, d));
    }
    s.chain_offsets.push_back((c + 1) * kept);
    ch.draws.clear();
    ch.draws.shrink_to_fit();
    accept += ch.acceptance;
    res.divergences += ch.divergences;
    res.rejections += ch.rejections;
  }
  s.meta.seed = config.seed;
  s.meta.chains = config.chains;
  s.meta.iterations = config.iterations;
  s.meta.burn_in = config.burn_in;
  s.meta.acceptance = accept / static_cast<double>(config.chains);
  s.meta.sampler = std::string(sampler_name(config.kind));
  s.meta.data_hash = hex64(model.data_hash());
  res.divergence_flag =
      static_cast<double>(res.divergences) > 0.1 * static_cast<double>(kept) * static_cast<double>(config.chains);
  return res;
}

}  // namespace draftval
