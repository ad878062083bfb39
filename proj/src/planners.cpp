#include "depf/planners.hpp"

#include "depf/plume_model.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace depf {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}  // namespace

std::string_view to_string(Action a) {
  static constexpr std::array<std::string_view, kNumActions> names = {
      "N", "NE", "E", "SE", "S", "SW", "W", "NW"};
  return names[static_cast<std::size_t>(a)];
}

Pose action_displacement(Action a) {
  switch (a) {
    case Action::kN: return {0.0, 1.0};
    case Action::kNE: return {kInvSqrt2, kInvSqrt2};
    case Action::kE: return {1.0, 0.0};
    case Action::kSE: return {kInvSqrt2, -kInvSqrt2};
    case Action::kS: return {0.0, -1.0};
    case Action::kSW: return {-kInvSqrt2, -kInvSqrt2};
    case Action::kW: return {-1.0, 0.0};
    case Action::kNW: return {-kInvSqrt2, kInvSqrt2};
  }
  return {};
}

Pose apply_action(const Pose& p, Action a, const Box2& domain) {
  const Pose d = action_displacement(a);
  return {std::clamp(p.x + d.x, domain.x_lo, domain.x_hi),
          std::clamp(p.y + d.y, domain.y_lo, domain.y_hi)};
}

std::vector<Action> available_actions(const Pose& p, const Box2& domain) {
  std::vector<Action> out;
  for (auto a : kAllActions) {
    const Pose n = apply_action(p, a, domain);
    if (std::hypot(n.x - p.x, n.y - p.y) > 1e-12) out.push_back(a);
  }
  return out;
}

std::string_view to_string(Planner p) {
  switch (p) {
    case Planner::kInfoGain: return "info_gain";
    case Planner::kInfotaxis: return "infotaxis";
    case Planner::kEntrotaxis: return "entrotaxis";
    case Planner::kDcee: return "dcee";
  }
  return "?";
}

Planner parse_planner(std::string_view s) {
  for (auto p : {Planner::kInfoGain, Planner::kInfotaxis, Planner::kEntrotaxis, Planner::kDcee})
    if (to_string(p) == s) return p;
  throw ConfigError("unknown planner: " + std::string(s));
}

std::string_view to_string(AgdcScope s) { return s == AgdcScope::kAll ? "all" : "position"; }

AgdcScope parse_agdc_scope(std::string_view s) {
  if (s == "all") return AgdcScope::kAll;
  if (s == "position") return AgdcScope::kPosition;
  throw ConfigError("unknown agdc_scope: " + std::string(s));
}

void LookaheadConfig::validate() const {
  if (mc_samples < 1) throw ConfigError("mc_samples must be >= 1");
  if (!(step_penalty >= 0.0)) throw ConfigError("step_penalty must be >= 0");
  if (!(time_penalty >= 0.0)) throw ConfigError("time_penalty must be >= 0");
  if (!(dcee_lambda >= 0.0)) throw ConfigError("dcee_lambda must be >= 0");
  if (!(agdc_zeta >= 0.0)) throw ConfigError("agdc_zeta must be >= 0");
  if (lps_gate && !(*lps_gate >= 0.0)) throw ConfigError("lps_gate must be >= 0");
  if (!(ridge >= 0.0)) throw ConfigError("ridge must be >= 0");
}

BeliefSummary BeliefSummary::from_moments(const Moments& m) {
  BeliefSummary b;
  b.mean = m.mean;
  b.cov = m.cov;
  b.std_norm = std::sqrt(m.cov.diagonal().cwiseMax(0.0).sum());
  b.pos_std_norm = std::sqrt(std::max(0.0, m.cov(0, 0)) + std::max(0.0, m.cov(1, 1)));
  return b;
}

BeliefSummary summarize(const ParticleSet& ps, double ridge) {
  return BeliefSummary::from_moments(mean_cov(ps, ridge));
}

double kl_gaussian(const Eigen::VectorXd& m0, const Eigen::MatrixXd& s0,
                   const Eigen::VectorXd& m1, const Eigen::MatrixXd& s1) {
  const Eigen::LLT<Eigen::MatrixXd> l0(s0);
  const Eigen::LLT<Eigen::MatrixXd> l1(s1);
  if (l0.info() != Eigen::Success || l1.info() != Eigen::Success)
    throw NumericalError("kl_gaussian: covariance is not positive definite");
  const auto k = static_cast<double>(m0.size());
  const Eigen::VectorXd dm = m1 - m0;
  const double trace_term = l1.solve(s0).trace();
  const double maha = dm.dot(l1.solve(dm));
  const double logdet0 = 2.0 * l0.matrixLLT().diagonal().array().log().sum();
  const double logdet1 = 2.0 * l1.matrixLLT().diagonal().array().log().sum();
  return std::max(0.0, 0.5 * (trace_term + maha - k + logdet1 - logdet0));
}

double kl_gaussian(const BeliefSummary& b_from, const BeliefSummary& b_to) {
  return kl_gaussian(b_from.mean, b_from.cov, b_to.mean, b_to.cov);
}

bool agdc_should_stop(const BeliefSummary& b, const LookaheadConfig& cfg,
                      std::optional<double> localization_error) {
  const double norm = cfg.agdc_scope == AgdcScope::kAll ? b.std_norm : b.pos_std_norm;
  if (!(norm <= cfg.agdc_zeta)) return false;
  if (cfg.lps_gate) return localization_error && *localization_error <= *cfg.lps_gate;
  return true;
}

namespace {

// Shared Monte Carlo look-ahead engine. The M hypothetical sources (one
// systematic draw from the belief) and the sensor noise draws are fixed once
// per planning call and reused for every action, so action scores differ by
// the action alone and not by Monte Carlo noise.
class LookaheadEngine {
 public:
  LookaheadEngine(const LookaheadContext& ctx, int mc_samples, Rng& rng)
      : ctx_(ctx),
        loglik_(ctx.noise),
        n_(ctx.belief.size()),
        readings_(n_),
        ll_(n_),
        weights_(n_) {
    if (mc_samples < 1) throw ConfigError("mc_samples must be >= 1");
    const auto m = static_cast<std::size_t>(mc_samples);
    source_idx_ = systematic_indices(ctx.belief.weights, m, rng);
    detect_.resize(m);
    noise_.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      detect_[k] = uniform01(rng) < ctx.noise.p_d;
      noise_[k] = std_normal(rng);
    }
  }

  template <class Visitor>
  void run(Action a, Visitor&& visit) {
    const Pose next = apply_action(ctx_.pose, a, ctx_.domain);
    for (std::size_t i = 0; i < n_; ++i)
      readings_[i] = expected_reading(next, ctx_.belief.particles[i]);
    for (std::size_t k = 0; k < source_idx_.size(); ++k) {
      const double z = detect_[k] ? readings_[source_idx_[k]] + ctx_.noise.sigma_bar * noise_[k]
                                  : ctx_.noise.sigma * noise_[k];
      for (std::size_t i = 0; i < n_; ++i) ll_[i] = loglik_(z, readings_[i]);
      std::copy(ctx_.belief.weights.begin(), ctx_.belief.weights.end(), weights_.begin());
      ctx_.update.apply(weights_, ll_);
      visit(std::span<const double>(weights_), next);
    }
  }

  int samples() const { return static_cast<int>(source_idx_.size()); }

 private:
  const LookaheadContext& ctx_;
  MixtureLogLik loglik_;
  std::size_t n_;
  std::vector<std::size_t> source_idx_;
  std::vector<char> detect_;
  std::vector<double> noise_;
  std::vector<double> readings_;
  std::vector<double> ll_;
  std::vector<double> weights_;
};

struct PositionalMoments {
  double mx = 0.0, my = 0.0, trace = 0.0;
};

PositionalMoments positional_moments(std::span<const SourceParams> ps,
                                     std::span<const double> w) {
  PositionalMoments m;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    m.mx += w[i] * ps[i].x;
    m.my += w[i] * ps[i].y;
  }
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double dx = ps[i].x - m.mx;
    const double dy = ps[i].y - m.my;
    m.trace += w[i] * (dx * dx + dy * dy);
  }
  return m;
}

enum class Sense { kMaximize, kMinimize };

// Picks the best available action; scores within a relative 1e-9 of the
// incumbent count as ties and keep the earlier action.
PlanResult choose(const std::array<double, kNumActions>& scores, Sense sense) {
  PlanResult r;
  r.scores = scores;
  double best = 0.0;
  for (std::size_t k = 0; k < kNumActions; ++k) {
    const double s = scores[k];
    if (std::isnan(s)) continue;
    if (!r.any_available) {
      r.any_available = true;
      r.action = kAllActions[k];
      best = s;
      continue;
    }
    const double tol = 1e-9 * std::max(1.0, std::abs(best));
    const bool better = sense == Sense::kMaximize ? s > best + tol : s < best - tol;
    if (better) {
      best = s;
      r.action = kAllActions[k];
    }
  }
  return r;
}

template <class ScoreFn>
std::array<double, kNumActions> score_actions(const LookaheadContext& ctx, ScoreFn&& score) {
  std::array<double, kNumActions> scores;
  scores.fill(kNaN);
  for (auto a : available_actions(ctx.pose, ctx.domain))
    scores[static_cast<std::size_t>(a)] = score(a);
  return scores;
}

}  // namespace

std::vector<ParticleSet> lookahead_belief(const LookaheadContext& ctx, Action action,
                                          int mc_samples, Rng& rng) {
  LookaheadEngine engine(ctx, mc_samples, rng);
  std::vector<ParticleSet> out;
  out.reserve(static_cast<std::size_t>(mc_samples));
  engine.run(action, [&](std::span<const double> w, const Pose&) {
    ParticleSet h;
    h.particles = ctx.belief.particles;
    h.weights.assign(w.begin(), w.end());
    h.generation = ctx.belief.generation + 1;
    out.push_back(std::move(h));
  });
  return out;
}

PlanResult info_gain_action(const LookaheadContext& ctx, const LookaheadConfig& cfg,
                            Rng& rng) {
  LookaheadEngine engine(ctx, cfg.mc_samples, rng);
  const Moments current = mean_cov(ctx.belief, cfg.ridge);
  const Eigen::LLT<Mat7> target(current.cov);
  if (target.info() != Eigen::Success)
    throw NumericalError("info_gain_action: belief covariance is not positive definite");
  const double logdet_target = 2.0 * target.matrixLLT().diagonal().array().log().sum();

  auto scores = score_actions(ctx, [&](Action a) {
    double total = 0.0;
    Pose next;
    engine.run(a, [&](std::span<const double> w, const Pose& p) {
      next = p;
      const Moments hyp = mean_cov(ctx.belief.particles, w, cfg.ridge);
      const Eigen::LLT<Mat7> l0(hyp.cov);
      const double logdet0 = 2.0 * l0.matrixLLT().diagonal().array().log().sum();
      const Vec7 dm = current.mean - hyp.mean;
      const double kl = 0.5 * (target.solve(hyp.cov).trace() + dm.dot(target.solve(dm)) -
                               static_cast<double>(kStateDim) + logdet_target - logdet0);
      total += std::max(0.0, kl);
    });
    const double gain = total / cfg.mc_samples;
    const double step = std::hypot(next.x - ctx.pose.x, next.y - ctx.pose.y);
    return gain - cfg.step_penalty * step - cfg.time_penalty;
  });
  return choose(scores, Sense::kMaximize);
}

PlanResult infotaxis_action(const LookaheadContext& ctx, const LookaheadConfig& cfg,
                            Rng& rng) {
  LookaheadEngine engine(ctx, cfg.mc_samples, rng);
  auto scores = score_actions(ctx, [&](Action a) {
    double total = 0.0;
    engine.run(a, [&](std::span<const double> w, const Pose&) {
      total += positional_moments(ctx.belief.particles, w).trace;
    });
    return total / cfg.mc_samples;
  });
  return choose(scores, Sense::kMinimize);
}

PlanResult entrotaxis_action(const LookaheadContext& ctx, const LookaheadConfig& cfg,
                             Rng& rng) {
  LookaheadEngine engine(ctx, cfg.mc_samples, rng);
  auto scores = score_actions(ctx, [&](Action a) {
    double total = 0.0;
    engine.run(a,
               [&](std::span<const double> w, const Pose&) { total += weight_entropy(w); });
    return total / cfg.mc_samples;
  });
  return choose(scores, Sense::kMaximize);
}

PlanResult dcee_action(const LookaheadContext& ctx, const LookaheadConfig& cfg, Rng& rng) {
  LookaheadEngine engine(ctx, cfg.mc_samples, rng);
  auto scores = score_actions(ctx, [&](Action a) {
    double mx = 0.0, my = 0.0, trace = 0.0;
    Pose next;
    engine.run(a, [&](std::span<const double> w, const Pose& p) {
      next = p;
      const auto pm = positional_moments(ctx.belief.particles, w);
      mx += pm.mx;
      my += pm.my;
      trace += pm.trace;
    });
    const double inv_m = 1.0 / cfg.mc_samples;
    const double dx = mx * inv_m - next.x;
    const double dy = my * inv_m - next.y;
    return dx * dx + dy * dy + cfg.dcee_lambda * trace * inv_m;
  });
  return choose(scores, Sense::kMinimize);
}

PlanResult plan_action(Planner planner, const LookaheadContext& ctx,
                       const LookaheadConfig& cfg, Rng& rng) {
  switch (planner) {
    case Planner::kInfoGain: return info_gain_action(ctx, cfg, rng);
    case Planner::kInfotaxis: return infotaxis_action(ctx, cfg, rng);
    case Planner::kEntrotaxis: return entrotaxis_action(ctx, cfg, rng);
    case Planner::kDcee: return dcee_action(ctx, cfg, rng);
  }
  throw ConfigError("unknown planner");
}

}  // namespace depf
