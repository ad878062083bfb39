#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace depf {

inline constexpr std::size_t kStateDim = 7;
inline constexpr double kTwoPi = 6.283185307179586476925286766559;

using Vec7 = Eigen::Matrix<double, 7, 1>;
using Mat7 = Eigen::Matrix<double, 7, 7>;

// Error taxonomy shared by every module. The C API maps each onto an error code.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ProtocolError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Latent source vector: position, release strength, wind speed and
/// direction, diffusivity, effective lifetime. Index order of to_vec():
/// x, y, q, u, phi, d, tau.
struct SourceParams {
  double x = 0.0;
  double y = 0.0;
  double q = 1.0;
  double u = 0.0;
  double phi = 0.0;
  double d = 1.0;
  double tau = 1.0;

  enum Index : std::size_t { kX = 0, kY, kQ, kU, kPhi, kD, kTau };

  /// Validating constructor: positivity checks and phi wrapped to [0, 2pi).
  static SourceParams make(double x, double y, double q, double u, double phi,
                           double d, double tau);

  Vec7 to_vec() const { return {x, y, q, u, phi, d, tau}; }
  static SourceParams from_vec(const Vec7& v) {
    return {v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
  }

  bool valid() const;

  friend bool operator==(const SourceParams&, const SourceParams&) = default;
};

/// Wraps an angle into [0, 2pi).
double wrap_angle(double phi);

/// Smallest admissible value for q, d and tau after clamping.
inline constexpr double kPositiveFloor = 1e-6;

/// Clamps q, u, d, tau to their physical ranges and wraps phi.
SourceParams clamp_physical(SourceParams p);

struct Pose {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Pose&, const Pose&) = default;
};

struct SensorNoise {
  double sigma_bar = 0.5;  // detection-branch std
  double sigma = 0.4;      // background std
  double p_d = 0.8;        // detection probability

  void validate() const;
};

/// Closed axis-aligned rectangle [x_lo, x_hi] x [y_lo, y_hi].
struct Box2 {
  double x_lo = 0.0;
  double x_hi = 0.0;
  double y_lo = 0.0;
  double y_hi = 0.0;

  double width() const { return x_hi - x_lo; }
  double height() const { return y_hi - y_lo; }
  double area() const { return width() * height(); }
  bool contains(double x, double y) const {
    return x >= x_lo && x <= x_hi && y >= y_lo && y <= y_hi;
  }
  bool contains(const Box2& o) const {
    return o.x_lo >= x_lo && o.x_hi <= x_hi && o.y_lo >= y_lo && o.y_hi <= y_hi;
  }
  Box2 intersect(const Box2& o) const;
  Box2 scaled(double s) const { return {x_lo * s, x_hi * s, y_lo * s, y_hi * s}; }
  bool empty() const { return !(x_hi > x_lo && y_hi > y_lo); }

  friend bool operator==(const Box2&, const Box2&) = default;
};

}  // namespace depf
