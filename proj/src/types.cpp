#include "depf/types.hpp"

#include <algorithm>
#include <cmath>

namespace depf {

double wrap_angle(double phi) {
  double w = std::fmod(phi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  // fmod of a tiny negative value can round up to exactly 2pi
  if (w >= kTwoPi) w = 0.0;
  return w;
}

SourceParams SourceParams::make(double x, double y, double q, double u,
                                double phi, double d, double tau) {
  if (!(q > 0.0)) throw ConfigError("source release strength q must be > 0");
  if (!(u >= 0.0)) throw ConfigError("wind speed u must be >= 0");
  if (!(d > 0.0)) throw ConfigError("diffusivity d must be > 0");
  if (!(tau > 0.0)) throw ConfigError("lifetime tau must be > 0");
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(phi))
    throw ConfigError("source parameters must be finite");
  return {x, y, q, u, wrap_angle(phi), d, tau};
}

bool SourceParams::valid() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(q) &&
         std::isfinite(u) && std::isfinite(d) && std::isfinite(tau) && q > 0.0 &&
         u >= 0.0 && d > 0.0 && tau > 0.0 && phi >= 0.0 && phi < kTwoPi;
}

SourceParams clamp_physical(SourceParams p) {
  p.q = std::max(p.q, kPositiveFloor);
  p.u = std::max(p.u, 0.0);
  p.d = std::max(p.d, kPositiveFloor);
  p.tau = std::max(p.tau, kPositiveFloor);
  p.phi = wrap_angle(p.phi);
  return p;
}

void SensorNoise::validate() const {
  if (!(sigma_bar > 0.0)) throw ConfigError("sigma_bar must be > 0");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be > 0");
  if (!(p_d >= 0.0 && p_d <= 1.0)) throw ConfigError("p_d must lie in [0, 1]");
}

Box2 Box2::intersect(const Box2& o) const {
  return {std::max(x_lo, o.x_lo), std::min(x_hi, o.x_hi), std::max(y_lo, o.y_lo),
          std::min(y_hi, o.y_hi)};
}

}  // namespace depf
