#include "depf/plume_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace depf {

namespace {
constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;
constexpr double kLogInvSqrt2Pi = -0.91893853320467274178032973640562;
}  // namespace

double expected_reading(const Pose& pose, const SourceParams& theta) {
  const double dx = pose.x - theta.x;
  const double dy = pose.y - theta.y;
  const double r = std::max(std::hypot(dx, dy), kMinSourceDistance);
  const double psi = theta.u * (dx * std::cos(theta.phi) + dy * std::sin(theta.phi));
  const double lambda =
      std::sqrt(theta.d * theta.tau / (1.0 + theta.u * theta.u * theta.tau / (4.0 * theta.d)));
  const double amp = theta.q / (4.0 * M_PI * theta.d * r);
  return amp * std::exp(-r / lambda - psi / (2.0 * theta.d));
}

double sample_measurement(const Pose& pose, const SourceParams& theta,
                          const SensorNoise& noise, Rng& rng) {
  const bool detected = std::bernoulli_distribution(noise.p_d)(rng);
  if (detected) return expected_reading(pose, theta) + noise.sigma_bar * std_normal(rng);
  return noise.sigma * std_normal(rng);
}

double gaussian_pdf(double x, double mean, double sd) {
  const double t = (x - mean) / sd;
  return kInvSqrt2Pi / sd * std::exp(-0.5 * t * t);
}

double likelihood(double z, const Pose& pose, const SourceParams& theta,
                  const SensorNoise& noise) {
  const double h = expected_reading(pose, theta);
  return (1.0 - noise.p_d) * gaussian_pdf(z, 0.0, noise.sigma) +
         noise.p_d * gaussian_pdf(z, h, noise.sigma_bar);
}

MixtureLogLik::MixtureLogLik(const SensorNoise& noise)
    : inv_sigma_(1.0 / noise.sigma), inv_sigma_bar_(1.0 / noise.sigma_bar) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  log_c_background_ = noise.p_d < 1.0
                          ? std::log1p(-noise.p_d) + kLogInvSqrt2Pi - std::log(noise.sigma)
                          : kNegInf;
  log_c_detect_ = noise.p_d > 0.0
                      ? std::log(noise.p_d) + kLogInvSqrt2Pi - std::log(noise.sigma_bar)
                      : kNegInf;
}

double MixtureLogLik::operator()(double z, double h) const {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const double tb = z * inv_sigma_;
  const double td = (z - h) * inv_sigma_bar_;
  const double lb = log_c_background_ - 0.5 * tb * tb;
  const double ld = log_c_detect_ - 0.5 * td * td;
  const double m = std::max(lb, ld);
  if (m == kNegInf) return kNegInf;
  return m + std::log1p(std::exp(std::min(lb, ld) - m));
}

double log_likelihood(double z, const Pose& pose, const SourceParams& theta,
                      const SensorNoise& noise) {
  return MixtureLogLik(noise)(z, expected_reading(pose, theta));
}

}  // namespace depf
