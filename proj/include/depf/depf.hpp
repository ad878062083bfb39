#pragma once

#include "depf/filter_core.hpp"
#include "depf/random.hpp"
#include "depf/types.hpp"

#include <string_view>
#include <vector>

namespace depf {

enum class RegMode { kTempering, kAdditive };
enum class MhMode { kLikelihoodRatio, kMainText };
enum class InjectionTrigger { kEss, kAlways };

std::string_view to_string(RegMode m);
std::string_view to_string(MhMode m);
std::string_view to_string(InjectionTrigger t);
RegMode parse_reg_mode(std::string_view s);
MhMode parse_mh_mode(std::string_view s);
InjectionTrigger parse_injection_trigger(std::string_view s);

/// Knobs of the diffusion-enhanced filter. Defaults follow the moderate
/// settings found to work best in the sensitivity sweeps.
struct DepfConfig {
  double exploratory_ratio = 0.05;
  double delta_margin = 0.3;       // support margin as a fraction of cloud extent
  double margin_floor = 1.0;       // extent floor (domain units) for the margin
  double epsilon_explore = 0.01;   // total weight handed to exploratory particles
  double beta_min = 0.3;           // additive-mode clamps
  double beta_max = 0.4;
  double h_target_frac = 0.8;      // H_target = h_target_frac * log N
  double bandwidth_A = 0.5;
  double ridge_lambda = 1e-2;
  double resample_ess_frac = 0.6;
  double trigger_ess_frac = 0.6;
  RegMode reg_mode = RegMode::kTempering;
  MhMode mh_mode = MhMode::kLikelihoodRatio;
  InjectionTrigger trigger = InjectionTrigger::kEss;
  // component switches for ablation runs
  bool enable_regularization = true;
  bool enable_diffusion = true;
  bool enable_mh = true;

  void validate() const;
  std::size_t exploratory_count(std::size_t n) const;
};

/// Exploratory region [domain.x_lo, x_max + margin_x] x [domain.y_lo, y_max + margin_y]
/// clipped to the domain.
struct SupportBox {
  Box2 box;
};

SupportBox compute_support_box(const ParticleSet& ps, const DepfConfig& cfg,
                               const Box2& domain);

/// Replaces |E| uniformly chosen particles by draws whose position is uniform
/// on `box` and whose other components come from the prior marginals. Their
/// weights become epsilon/|E|; the rest are scaled by (1 - epsilon) and the
/// whole vector is renormalized. Returns the replaced indices.
std::vector<std::size_t> inject_exploratory(ParticleSet& ps, const SupportBox& box,
                                            const PriorBox& prior, const DepfConfig& cfg,
                                            Rng& rng);

/// Tempering w^(1/T) with T = 1 + max(0, (H_target - H) / H_target), or the
/// additive form w + beta H with beta clamped to [beta_min, beta_max].
/// Returns the temperature (tempering) or beta (additive) that was applied.
double regularize_weights(std::span<double> weights, const DepfConfig& cfg);
inline double regularize_weights(ParticleSet& ps, const DepfConfig& cfg) {
  return regularize_weights(std::span<double>(ps.weights), cfg);
}

/// Explicit-temperature tempering, w <- w^(1/T) renormalized.
void temper_weights(std::span<double> weights, double temperature);

/// h_opt = A * N^(-1/(dim + 4)).
double kernel_bandwidth(std::size_t n_particles, std::size_t dim, const DepfConfig& cfg);

struct DiffusionProposal {
  std::vector<SourceParams> proposed;  // theta + delta, unclamped
  std::vector<Vec7> deltas;
  Mat7 cov;                            // Sigma, ridge included
  double bandwidth = 0.0;
};

/// Covariance-scaled Gaussian kernel step delta = h_opt L xi, L L^T = Sigma.
DiffusionProposal diffuse(const ParticleSet& ps, const DepfConfig& cfg, Rng& rng);

/// Same step with an explicit covariance and bandwidth.
DiffusionProposal diffuse_with(const ParticleSet& ps, const Mat7& cov, double bandwidth,
                               Rng& rng);

struct MhStats {
  std::size_t proposed = 0;
  std::size_t accepted = 0;
  double acceptance() const {
    return proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 1.0;
  }
};

/// Metropolis-Hastings accept/reject of each proposal against the current
/// observation. Rejected particles keep their value; weights are unchanged.
/// Accepted proposals are clamped to physical bounds and, when `domain` is
/// non-empty, to the domain.
MhStats mh_validate(ParticleSet& ps, const DiffusionProposal& proposal, double z,
                    const Pose& pose, const SensorNoise& noise, const DepfConfig& cfg,
                    const Box2& domain, Rng& rng);

/// Acceptance probability for one move, exposed for the toy-target tests.
double mh_acceptance(double log_lik_current, double log_lik_proposed, MhMode mode,
                     double mahalanobis_sq = 0.0);

struct DepfStepInfo {
  bool injected = false;
  bool resampled = false;
  bool degenerate = false;
  double ess_after_update = 0.0;
  double regularization = 0.0;
  MhStats mh;
  SupportBox support;
};

/// Per-episode filter state: the most recent post-update ESS drives the
/// injection trigger.
struct DepfState {
  double last_ess_frac = 1.0;
  std::size_t steps = 0;
  std::size_t injections = 0;
  std::size_t degeneracy_events = 0;
  MhStats mh_total;
};

/// One full step: trigger check, injection, weight update, regularization,
/// ESS-gated resampling, diffusion and MH validation.
DepfStepInfo depf_step(ParticleSet& ps, DepfState& state, double z, const Pose& pose,
                       const SensorNoise& noise, const PriorBox& prior,
                       const DepfConfig& cfg, const Box2& domain, Rng& rng);

}  // namespace depf
