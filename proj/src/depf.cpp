#include "depf/depf.hpp"

#include "depf/log.hpp"
#include "depf/plume_model.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace depf {

std::string_view to_string(RegMode m) {
  return m == RegMode::kTempering ? "tempering" : "additive";
}
std::string_view to_string(MhMode m) {
  return m == MhMode::kLikelihoodRatio ? "likelihood_ratio" : "main_text";
}
std::string_view to_string(InjectionTrigger t) {
  return t == InjectionTrigger::kEss ? "ess" : "always";
}

RegMode parse_reg_mode(std::string_view s) {
  if (s == "tempering") return RegMode::kTempering;
  if (s == "additive") return RegMode::kAdditive;
  throw ConfigError("unknown reg_mode: " + std::string(s));
}
MhMode parse_mh_mode(std::string_view s) {
  if (s == "likelihood_ratio") return MhMode::kLikelihoodRatio;
  if (s == "main_text") return MhMode::kMainText;
  throw ConfigError("unknown mh_mode: " + std::string(s));
}
InjectionTrigger parse_injection_trigger(std::string_view s) {
  if (s == "ess") return InjectionTrigger::kEss;
  if (s == "always") return InjectionTrigger::kAlways;
  throw ConfigError("unknown injection trigger: " + std::string(s));
}

void DepfConfig::validate() const {
  if (!(exploratory_ratio > 0.0 && exploratory_ratio < 1.0))
    throw ConfigError("exploratory_ratio must lie in (0, 1)");
  if (!(delta_margin >= 0.0)) throw ConfigError("delta_margin must be >= 0");
  if (!(margin_floor >= 0.0)) throw ConfigError("margin_floor must be >= 0");
  if (!(epsilon_explore > 0.0 && epsilon_explore < 1.0))
    throw ConfigError("epsilon_explore must lie in (0, 1)");
  if (!(beta_min >= 0.0 && beta_min <= beta_max))
    throw ConfigError("need 0 <= beta_min <= beta_max");
  if (!(h_target_frac > 0.0 && h_target_frac <= 1.0))
    throw ConfigError("h_target_frac must lie in (0, 1]");
  if (!(bandwidth_A > 0.0)) throw ConfigError("bandwidth_A must be > 0");
  if (!(ridge_lambda > 0.0)) throw ConfigError("ridge_lambda must be > 0");
  if (!(resample_ess_frac > 0.0 && resample_ess_frac <= 1.0))
    throw ConfigError("resample_ess_frac must lie in (0, 1]");
  if (!(trigger_ess_frac > 0.0 && trigger_ess_frac <= 1.0))
    throw ConfigError("trigger_ess_frac must lie in (0, 1]");
}

std::size_t DepfConfig::exploratory_count(std::size_t n) const {
  const auto count = static_cast<std::size_t>(std::llround(exploratory_ratio * static_cast<double>(n)));
  if (count < 1)
    throw ConfigError("exploratory_ratio too small for " + std::to_string(n) + " particles");
  return std::min(count, n);
}

SupportBox compute_support_box(const ParticleSet& ps, const DepfConfig& cfg,
                               const Box2& domain) {
  const Box2 cloud = ps.positional_bounds();
  const double mx = cfg.delta_margin * std::max(cloud.width(), cfg.margin_floor);
  const double my = cfg.delta_margin * std::max(cloud.height(), cfg.margin_floor);
  SupportBox s;
  s.box = {domain.x_lo, std::min(domain.x_hi, cloud.x_hi + mx), domain.y_lo,
           std::min(domain.y_hi, cloud.y_hi + my)};
  return s;
}

std::vector<std::size_t> inject_exploratory(ParticleSet& ps, const SupportBox& box,
                                            const PriorBox& prior, const DepfConfig& cfg,
                                            Rng& rng) {
  const std::size_t n = ps.size();
  const std::size_t count = cfg.exploratory_count(n);

  // partial Fisher-Yates for a uniform index subset
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  order.resize(count);

  for (double& w : ps.weights) w *= 1.0 - cfg.epsilon_explore;
  const double w_explore = cfg.epsilon_explore / static_cast<double>(count);
  for (auto i : order) {
    SourceParams p = prior.sample(rng);
    p.x = uniform(rng, box.box.x_lo, box.box.x_hi);
    p.y = uniform(rng, box.box.y_lo, box.box.y_hi);
    ps.particles[i] = clamp_physical(p);
    ps.weights[i] = w_explore;
  }
  normalize(ps.weights);
  return order;
}

void temper_weights(std::span<double> weights, double temperature) {
  if (temperature == 1.0) return;
  const double inv_t = 1.0 / temperature;
  double max_log = -std::numeric_limits<double>::infinity();
  for (double& w : weights) {
    w = w > 0.0 ? std::log(w) * inv_t : -std::numeric_limits<double>::infinity();
    max_log = std::max(max_log, w);
  }
  for (double& w : weights) w = std::exp(w - max_log);
  normalize(weights);
}

double regularize_weights(std::span<double> weights, const DepfConfig& cfg) {
  const double n = static_cast<double>(weights.size());
  const double h_target = cfg.h_target_frac * std::log(n);
  const double h = weight_entropy(weights);
  const double gap = h_target > 0.0 ? (h_target - h) / h_target : 0.0;

  if (cfg.reg_mode == RegMode::kTempering) {
    const double temperature = 1.0 + std::max(0.0, gap);
    temper_weights(weights, temperature);
    return temperature;
  }
  const double beta = std::clamp(gap, cfg.beta_min, cfg.beta_max);
  for (double& w : weights) w += beta * h;
  normalize(weights);
  return beta;
}

double kernel_bandwidth(std::size_t n_particles, std::size_t dim, const DepfConfig& cfg) {
  if (n_particles < 1 || dim < 1) throw ConfigError("kernel_bandwidth needs N >= 1, dim >= 1");
  return cfg.bandwidth_A *
         std::pow(static_cast<double>(n_particles), -1.0 / (static_cast<double>(dim) + 4.0));
}

DiffusionProposal diffuse_with(const ParticleSet& ps, const Mat7& cov, double bandwidth,
                               Rng& rng) {
  const Eigen::LLT<Mat7> llt(cov);
  if (llt.info() != Eigen::Success)
    throw NumericalError("diffuse: covariance is not positive definite (ridge = 0?)");
  const Mat7 scaled_l = bandwidth * Mat7(llt.matrixL());

  DiffusionProposal out;
  out.cov = cov;
  out.bandwidth = bandwidth;
  out.proposed.resize(ps.size());
  out.deltas.resize(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    Vec7 xi;
    for (std::size_t k = 0; k < kStateDim; ++k) xi[k] = std_normal(rng);
    out.deltas[i] = scaled_l * xi;
    out.proposed[i] = SourceParams::from_vec(ps.particles[i].to_vec() + out.deltas[i]);
  }
  return out;
}

DiffusionProposal diffuse(const ParticleSet& ps, const DepfConfig& cfg, Rng& rng) {
  const Moments m = mean_cov(ps, cfg.ridge_lambda);
  return diffuse_with(ps, m.cov, kernel_bandwidth(ps.size(), kStateDim, cfg), rng);
}

double mh_acceptance(double log_lik_current, double log_lik_proposed, MhMode mode,
                     double mahalanobis_sq) {
  double log_alpha = log_lik_proposed - log_lik_current;
  if (mode == MhMode::kMainText) log_alpha -= 0.5 * mahalanobis_sq;
  if (std::isnan(log_alpha)) return 0.0;
  return log_alpha >= 0.0 ? 1.0 : std::exp(log_alpha);
}

namespace {

// Support of the MH target: inside the domain and physically admissible.
// phi is periodic and never leaves the support.
bool in_support(const SourceParams& p, const Box2& domain) {
  if (!(p.q > 0.0 && p.u >= 0.0 && p.d > 0.0 && p.tau > 0.0)) return false;
  if (domain.empty()) return true;
  return domain.contains(p.x, p.y);
}

}  // namespace

MhStats mh_validate(ParticleSet& ps, const DiffusionProposal& proposal, double z,
                    const Pose& pose, const SensorNoise& noise, const DepfConfig& cfg,
                    const Box2& domain, Rng& rng) {
  const MixtureLogLik loglik(noise);
  Eigen::LLT<Mat7> llt;
  if (cfg.mh_mode == MhMode::kMainText) llt.compute(proposal.cov);

  MhStats stats;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    ++stats.proposed;
    const double u = uniform01(rng);
    SourceParams cand = proposal.proposed[i];
    cand.phi = wrap_angle(cand.phi);
    if (!in_support(cand, domain)) continue;

    double maha = 0.0;
    if (cfg.mh_mode == MhMode::kMainText)
      maha = llt.matrixL().solve(proposal.deltas[i]).squaredNorm();
    const double ll_cur = loglik(z, expected_reading(pose, ps.particles[i]));
    const double ll_new = loglik(z, expected_reading(pose, cand));
    if (u < mh_acceptance(ll_cur, ll_new, cfg.mh_mode, maha)) {
      ps.particles[i] = clamp_physical(cand);
      ++stats.accepted;
    }
  }
  return stats;
}

DepfStepInfo depf_step(ParticleSet& ps, DepfState& state, double z, const Pose& pose,
                       const SensorNoise& noise, const PriorBox& prior,
                       const DepfConfig& cfg, const Box2& domain, Rng& rng) {
  DepfStepInfo info;
  const double n = static_cast<double>(ps.size());

  const bool fire = cfg.trigger == InjectionTrigger::kAlways ||
                    state.last_ess_frac < cfg.trigger_ess_frac;
  if (fire) {
    info.support = compute_support_box(ps, cfg, domain);
    inject_exploratory(ps, info.support, prior, cfg, rng);
    info.injected = true;
    ++state.injections;
  }

  const auto upd = weight_update(ps, z, pose, noise);
  info.degenerate = upd.degenerate;
  info.ess_after_update = upd.ess;
  state.last_ess_frac = upd.ess / n;
  if (upd.degenerate) ++state.degeneracy_events;

  if (cfg.enable_regularization) info.regularization = regularize_weights(ps, cfg);

  if (ess(ps) / n < cfg.resample_ess_frac) {
    resample_systematic(ps, rng);
    info.resampled = true;
  }

  if (cfg.enable_diffusion) {
    const auto proposal = diffuse(ps, cfg, rng);
    if (cfg.enable_mh) {
      info.mh = mh_validate(ps, proposal, z, pose, noise, cfg, domain, rng);
    } else {
      for (std::size_t i = 0; i < ps.size(); ++i) {
        SourceParams cand = clamp_physical(proposal.proposed[i]);
        if (!domain.empty()) {
          cand.x = std::clamp(cand.x, domain.x_lo, domain.x_hi);
          cand.y = std::clamp(cand.y, domain.y_lo, domain.y_hi);
        }
        ps.particles[i] = cand;
      }
      info.mh.proposed = info.mh.accepted = ps.size();
    }
    state.mh_total.proposed += info.mh.proposed;
    state.mh_total.accepted += info.mh.accepted;
  }

  ++ps.generation;
  ++state.steps;
  spdlog::debug("depf_step gen={} injected={} ess={:.1f} resampled={} mh_acc={:.3f}",
                ps.generation, info.injected, upd.ess, info.resampled, info.mh.acceptance());
  return info;
}

}  // namespace depf
