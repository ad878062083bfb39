#pragma once

#include "depf/depf.hpp"
#include "depf/filter_core.hpp"
#include "depf/perturbations.hpp"

#include <span>
#include <string_view>

namespace depf {

enum class Method { kBootstrap, kDepf, kJitter, kRoughen, kRejuvenate };

std::string_view to_string(Method m);
Method parse_method(std::string_view s);

struct FilterSettings {
  SensorNoise noise;
  DepfConfig depf;
  PerturbConfig perturb;
  double resample_ess_frac = 0.6;  // used by the bootstrap and perturbation methods
};

struct FilterStepInfo {
  bool resampled = false;
  bool degenerate = false;
  bool injected = false;
  double ess_after_update = 0.0;
  MhStats mh;
};

/// The reweighting part of a filter step, used for hypothetical look-ahead
/// beliefs: likelihood reweighting plus, for DEPF, the weight regularization.
/// Particle values never move.
struct HypotheticalUpdate {
  bool regularize = false;
  DepfConfig depf;

  /// weights <- normalized(weights * exp(log_lik)), then regularized.
  void apply(std::span<double> weights, std::span<const double> log_lik) const;
};

/// One episode's belief: a particle set plus the method-specific update.
class BeliefFilter {
 public:
  BeliefFilter(Method method, FilterSettings settings, PriorBox prior, Box2 domain,
               std::size_t n_particles, Rng rng);

  FilterStepInfo update(double z, const Pose& pose);

  const ParticleSet& particles() const { return ps_; }
  Method method() const { return method_; }
  const FilterSettings& settings() const { return settings_; }
  const PriorBox& prior() const { return prior_; }
  const Box2& domain() const { return domain_; }
  const DepfState& depf_state() const { return depf_state_; }
  std::size_t degeneracy_events() const { return degeneracy_events_; }
  HypotheticalUpdate hypothetical_update() const;

 private:
  Method method_;
  FilterSettings settings_;
  PriorBox prior_;
  Box2 domain_;
  ParticleSet ps_;
  DepfState depf_state_;
  Rng rng_;
  std::size_t degeneracy_events_ = 0;
};

}  // namespace depf
