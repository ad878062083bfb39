#include "depf/perturbations.hpp"

#include "depf/plume_model.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace depf {

void PerturbConfig::validate() const {
  if (!(jitter_sigma.array() > 0.0).all()) throw ConfigError("jitter_sigma must be > 0");
  if (!(rough_K > 0.0)) throw ConfigError("rough_K must be > 0");
  if (!(rejuv_sigma_rm > 0.0)) throw ConfigError("rejuv_sigma_rm must be > 0");
  if (rejuv_moves < 1) throw ConfigError("rejuv_moves must be >= 1");
  if (!(ridge_lambda > 0.0)) throw ConfigError("perturbation ridge_lambda must be > 0");
}

void jitter(ParticleSet& ps, const PerturbConfig& cfg, Rng& rng) {
  for (auto& p : ps.particles) {
    Vec7 v = p.to_vec();
    for (std::size_t k = 0; k < kStateDim; ++k) v[k] += cfg.jitter_sigma[k] * std_normal(rng);
    p = clamp_physical(SourceParams::from_vec(v));
  }
}

Vec7 roughening_std(const ParticleSet& ps, double k) {
  Vec7 lo = Vec7::Constant(std::numeric_limits<double>::infinity());
  Vec7 hi = -lo;
  for (const auto& p : ps.particles) {
    const Vec7 v = p.to_vec();
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const double scale =
      k * std::pow(static_cast<double>(ps.size()), -1.0 / static_cast<double>(kStateDim));
  return scale * (hi - lo);
}

void roughen(ParticleSet& ps, const PerturbConfig& cfg, Rng& rng) {
  const Vec7 sd = roughening_std(ps, cfg.rough_K);
  for (auto& p : ps.particles) {
    Vec7 v = p.to_vec();
    for (std::size_t k = 0; k < kStateDim; ++k) {
      const double e = std_normal(rng);
      if (sd[k] > 0.0) v[k] += sd[k] * e;
    }
    p = clamp_physical(SourceParams::from_vec(v));
  }
}

MhStats rejuvenate(ParticleSet& ps, const PerturbConfig& cfg, double z, const Pose& pose,
                   const SensorNoise& noise, const Box2& domain, Rng& rng) {
  return rejuvenate_with(ps, mean_cov(ps, cfg.ridge_lambda).cov, cfg, z, pose, noise, domain,
                         rng);
}

MhStats rejuvenate_with(ParticleSet& ps, const Mat7& cov, const PerturbConfig& cfg, double z,
                        const Pose& pose, const SensorNoise& noise, const Box2& domain,
                        Rng& rng) {
  const MixtureLogLik loglik(noise);
  const Eigen::LLT<Mat7> llt(cov);
  if (llt.info() != Eigen::Success)
    throw NumericalError("rejuvenate: covariance is not positive definite");
  const Mat7 scaled_l = cfg.rejuv_sigma_rm * Mat7(llt.matrixL());

  MhStats stats;
  for (auto& p : ps.particles) {
    double ll_cur = loglik(z, expected_reading(pose, p));
    for (int move = 0; move < cfg.rejuv_moves; ++move) {
      Vec7 xi;
      for (std::size_t k = 0; k < kStateDim; ++k) xi[k] = std_normal(rng);
      const double u = uniform01(rng);
      ++stats.proposed;
      SourceParams cand = SourceParams::from_vec(p.to_vec() + scaled_l * xi);
      cand.phi = wrap_angle(cand.phi);
      if (!(cand.q > 0.0 && cand.u >= 0.0 && cand.d > 0.0 && cand.tau > 0.0)) continue;
      if (!domain.empty() && !domain.contains(cand.x, cand.y)) continue;
      const double ll_new = loglik(z, expected_reading(pose, cand));
      if (u < mh_acceptance(ll_cur, ll_new, MhMode::kLikelihoodRatio)) {
        p = cand;
        ll_cur = ll_new;
        ++stats.accepted;
      }
    }
  }
  return stats;
}

}  // namespace depf
