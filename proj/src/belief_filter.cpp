#include "depf/belief_filter.hpp"

#include <algorithm>

namespace depf {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kBootstrap: return "bootstrap";
    case Method::kDepf: return "depf";
    case Method::kJitter: return "jitter";
    case Method::kRoughen: return "roughen";
    case Method::kRejuvenate: return "rejuvenate";
  }
  return "?";
}

Method parse_method(std::string_view s) {
  for (auto m : {Method::kBootstrap, Method::kDepf, Method::kJitter, Method::kRoughen,
                 Method::kRejuvenate})
    if (to_string(m) == s) return m;
  throw ConfigError("unknown method: " + std::string(s));
}

void HypotheticalUpdate::apply(std::span<double> weights,
                               std::span<const double> log_lik) const {
  weight_update_log(weights, log_lik);
  if (regularize) regularize_weights(weights, depf);
}

BeliefFilter::BeliefFilter(Method method, FilterSettings settings, PriorBox prior,
                           Box2 domain, std::size_t n_particles, Rng rng)
    : method_(method),
      settings_(std::move(settings)),
      prior_(std::move(prior)),
      domain_(domain),
      rng_(std::move(rng)) {
  settings_.noise.validate();
  if (method_ == Method::kDepf) {
    settings_.depf.validate();
    settings_.depf.exploratory_count(n_particles);
  }
  if (method_ == Method::kJitter || method_ == Method::kRoughen ||
      method_ == Method::kRejuvenate)
    settings_.perturb.validate();
  ps_ = init_from_prior(prior_, n_particles, rng_);
}

HypotheticalUpdate BeliefFilter::hypothetical_update() const {
  HypotheticalUpdate h;
  h.regularize = method_ == Method::kDepf && settings_.depf.enable_regularization;
  h.depf = settings_.depf;
  return h;
}

FilterStepInfo BeliefFilter::update(double z, const Pose& pose) {
  FilterStepInfo info;
  if (method_ == Method::kDepf) {
    const auto s = depf_step(ps_, depf_state_, z, pose, settings_.noise, prior_,
                             settings_.depf, domain_, rng_);
    info.resampled = s.resampled;
    info.degenerate = s.degenerate;
    info.injected = s.injected;
    info.ess_after_update = s.ess_after_update;
    info.mh = s.mh;
    if (s.degenerate) ++degeneracy_events_;
    return info;
  }

  const auto upd = weight_update(ps_, z, pose, settings_.noise);
  info.degenerate = upd.degenerate;
  info.ess_after_update = upd.ess;
  if (upd.degenerate) ++degeneracy_events_;

  const double n = static_cast<double>(ps_.size());
  if (upd.ess / n < settings_.resample_ess_frac) {
    resample_systematic(ps_, rng_);
    info.resampled = true;
    switch (method_) {
      case Method::kJitter: jitter(ps_, settings_.perturb, rng_); break;
      case Method::kRoughen: roughen(ps_, settings_.perturb, rng_); break;
      case Method::kRejuvenate:
        info.mh = rejuvenate(ps_, settings_.perturb, z, pose, settings_.noise, domain_, rng_);
        break;
      default: break;
    }
    if (method_ == Method::kJitter || method_ == Method::kRoughen) {
      for (auto& p : ps_.particles) {
        p.x = std::clamp(p.x, domain_.x_lo, domain_.x_hi);
        p.y = std::clamp(p.y, domain_.y_lo, domain_.y_hi);
      }
    }
  }
  ++ps_.generation;
  return info;
}

}  // namespace depf
