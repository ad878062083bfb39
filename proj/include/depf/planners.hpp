#pragma once

#include "depf/belief_filter.hpp"
#include "depf/filter_core.hpp"
#include "depf/random.hpp"
#include "depf/types.hpp"

#include <Eigen/Core>

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace depf {

enum class Action : int { kN = 0, kNE, kE, kSE, kS, kSW, kW, kNW };

inline constexpr std::size_t kNumActions = 8;

/// Fixed enumeration order, N first then clockwise; ties resolve to the
/// earliest entry.
inline constexpr std::array<Action, kNumActions> kAllActions = {
    Action::kN, Action::kNE, Action::kE, Action::kSE,
    Action::kS, Action::kSW, Action::kW, Action::kNW};

std::string_view to_string(Action a);

/// Unit-length displacement (diagonals normalized).
Pose action_displacement(Action a);

/// p + displacement, clamped into the domain.
Pose apply_action(const Pose& p, Action a, const Box2& domain);

/// Actions that actually move the agent once clamped to the domain.
std::vector<Action> available_actions(const Pose& p, const Box2& domain);

enum class Planner { kInfoGain, kInfotaxis, kEntrotaxis, kDcee };

/// Which standard deviations enter the AGDC norm.
enum class AgdcScope { kPosition, kAll };

std::string_view to_string(AgdcScope s);
AgdcScope parse_agdc_scope(std::string_view s);

std::string_view to_string(Planner p);
Planner parse_planner(std::string_view s);

struct LookaheadConfig {
  int mc_samples = 12;
  double step_penalty = 0.0;
  double time_penalty = 0.0;
  double dcee_lambda = 1.0;
  /// Stop threshold on ||STD||_2. With the positional scope and ridge 1e-2,
  /// stopping needs sqrt(var_x + var_y) <= 0.3.
  double agdc_zeta = 0.331662479;
  AgdcScope agdc_scope = AgdcScope::kPosition;
  std::optional<double> lps_gate;  // optional localization gate
  double ridge = 1e-2;             // ridge for belief summaries

  void validate() const;
};

struct BeliefSummary {
  Vec7 mean = Vec7::Zero();
  Mat7 cov = Mat7::Identity();
  double std_norm = 0.0;      // ||sqrt(diag(cov))||_2, all dimensions
  double pos_std_norm = 0.0;  // same over (x, y)

  static BeliefSummary from_moments(const Moments& m);
  Pose position() const { return {mean[0], mean[1]}; }
};

BeliefSummary summarize(const ParticleSet& ps, double ridge);

/// KL(N(m0, s0) || N(m1, s1)) in closed form; any dimension.
double kl_gaussian(const Eigen::VectorXd& m0, const Eigen::MatrixXd& s0,
                   const Eigen::VectorXd& m1, const Eigen::MatrixXd& s1);

/// KL(b_from || b_to) between moment-matched Gaussians.
double kl_gaussian(const BeliefSummary& b_from, const BeliefSummary& b_to);

/// true iff ||STD||_2 <= zeta and, when a gate is configured, the
/// localization error passes it as well.
bool agdc_should_stop(const BeliefSummary& b, const LookaheadConfig& cfg,
                      std::optional<double> localization_error = std::nullopt);

/// Everything the look-ahead engine needs from the live episode.
struct LookaheadContext {
  const ParticleSet& belief;
  Pose pose;
  Box2 domain;
  SensorNoise noise;
  HypotheticalUpdate update;
};

/// M hypothetical posteriors for one action: theta^(m) ~ b_k,
/// z^(m) ~ p(. | f(p, a), theta^(m)), belief copy reweighted with z^(m).
std::vector<ParticleSet> lookahead_belief(const LookaheadContext& ctx, Action action,
                                          int mc_samples, Rng& rng);

struct PlanResult {
  Action action = Action::kN;
  std::array<double, kNumActions> scores{};  // NaN for unavailable actions
  bool any_available = false;
};

/// argmax_a { mean_m KL(b^(m) || b_k) - step_penalty |f(p,a) - p| - time_penalty }.
PlanResult info_gain_action(const LookaheadContext& ctx, const LookaheadConfig& cfg,
                            Rng& rng);

/// argmin_a mean_m trace of the positional posterior covariance.
PlanResult infotaxis_action(const LookaheadContext& ctx, const LookaheadConfig& cfg,
                            Rng& rng);

/// argmax_a mean_m weight entropy of the hypothetical posterior.
PlanResult entrotaxis_action(const LookaheadContext& ctx, const LookaheadConfig& cfg,
                             Rng& rng);

/// argmin_a ||mu_pos - f(p,a)||^2 + lambda tr(Cov_pos) over MC-averaged
/// hypothetical posteriors.
PlanResult dcee_action(const LookaheadContext& ctx, const LookaheadConfig& cfg, Rng& rng);

PlanResult plan_action(Planner planner, const LookaheadContext& ctx,
                       const LookaheadConfig& cfg, Rng& rng);

}  // namespace depf
