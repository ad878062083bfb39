#pragma once

#include "depf/depf.hpp"
#include "depf/filter_core.hpp"

namespace depf {

/// Scales of the classical post-resampling perturbation baselines.
struct PerturbConfig {
  /// Per-dimension jitter std (x, y, q, u, phi, d, tau).
  Vec7 jitter_sigma = (Vec7() << 0.1, 0.1, 10.0, 0.05, 0.05, 0.05, 0.05).finished();
  double rough_K = 0.1;
  double rejuv_sigma_rm = 0.5;
  int rejuv_moves = 1;
  double ridge_lambda = 1e-2;  // ridge on the resample-move covariance

  void validate() const;
};

/// theta <- theta + eps, eps ~ N(0, diag(jitter_sigma^2)).
void jitter(ParticleSet& ps, const PerturbConfig& cfg, Rng& rng);

/// Gordon roughening: per-dimension std K * range_d * N^(-1/dim). Dimensions
/// with zero sample range are left alone.
void roughen(ParticleSet& ps, const PerturbConfig& cfg, Rng& rng);

/// Per-dimension roughening std for the current cloud.
Vec7 roughening_std(const ParticleSet& ps, double k);

/// Resample-move: `rejuv_moves` MH moves per particle with proposal
/// N(theta, sigma_rm^2 Sigma) and likelihood-ratio acceptance.
MhStats rejuvenate(ParticleSet& ps, const PerturbConfig& cfg, double z, const Pose& pose,
                   const SensorNoise& noise, const Box2& domain, Rng& rng);

/// Same moves with an explicit (unscaled) proposal covariance.
MhStats rejuvenate_with(ParticleSet& ps, const Mat7& cov, const PerturbConfig& cfg, double z,
                        const Pose& pose, const SensorNoise& noise, const Box2& domain,
                        Rng& rng);

}  // namespace depf
