#pragma once

#include "depf/random.hpp"
#include "depf/types.hpp"

namespace depf {

/// Distance below which the plume singularity is clamped.
inline constexpr double kMinSourceDistance = 1e-3;

/// Expected (noise-free) sensor voltage at `pose` for a source `theta`:
///
///   h = q / (4 pi d r) * exp(-r / lambda - psi / (2 d))
///   psi = (x - x_s) u cos(phi) + (y - y_s) u sin(phi)
///   lambda = sqrt(d tau / (1 + u^2 tau / (4 d)))
///
/// r is clamped to kMinSourceDistance.
double expected_reading(const Pose& pose, const SourceParams& theta);

/// Draws z = D (h + v_bar) + (1 - D) v with D ~ Bernoulli(p_d).
double sample_measurement(const Pose& pose, const SourceParams& theta,
                          const SensorNoise& noise, Rng& rng);

/// Mixture density (1 - p_d) N(z; 0, sigma^2) + p_d N(z; h, sigma_bar^2).
double likelihood(double z, const Pose& pose, const SourceParams& theta,
                  const SensorNoise& noise);

/// log of likelihood(), evaluated without underflow.
double log_likelihood(double z, const Pose& pose, const SourceParams& theta,
                      const SensorNoise& noise);

/// log-mixture with the noise constants folded in; for inner loops that
/// already hold the expected reading h.
class MixtureLogLik {
 public:
  explicit MixtureLogLik(const SensorNoise& noise);
  double operator()(double z, double h) const;

 private:
  double inv_sigma_;
  double inv_sigma_bar_;
  double log_c_background_;  // log((1-p_d) / (sigma sqrt(2pi))), -inf if p_d == 1
  double log_c_detect_;      // log(p_d / (sigma_bar sqrt(2pi))), -inf if p_d == 0
};

double gaussian_pdf(double x, double mean, double sd);

}  // namespace depf
