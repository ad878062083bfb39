#pragma once

#include "depf/random.hpp"
#include "depf/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace depf {

/// Weighted particle approximation of p(theta | z_1:k).
struct ParticleSet {
  std::vector<SourceParams> particles;
  std::vector<double> weights;
  std::uint64_t generation = 0;

  std::size_t size() const { return particles.size(); }

  /// Throws NumericalError when the size, sign or normalization invariants fail.
  void check_invariants(double sum_tol = 1e-9) const;

  /// Positional bounding box of the particle cloud.
  Box2 positional_bounds() const;

  /// FNV-1a hash over the raw bytes of particles and weights.
  std::uint64_t fingerprint() const;

  friend bool operator==(const ParticleSet&, const ParticleSet&) = default;
};

/// Per-dimension support of the initial prior. Positional bounds come from the
/// scenario; the rest are the source-parameter marginals.
struct PriorBox {
  Vec7 lower;
  Vec7 upper;

  /// Position from `positional`, remaining marginals
  /// q ~ U(10, 3000), u ~ U(0, 6), phi ~ U(0, 2pi), d ~ U(1, 5), tau ~ U(0.5, 8).
  static PriorBox with_default_marginals(const Box2& positional);

  Box2 positional() const { return {lower[0], upper[0], lower[1], upper[1]}; }
  void validate() const;
  bool contains(const SourceParams& p) const;

  /// Draws one dimension from its uniform marginal.
  double sample_dim(std::size_t dim, Rng& rng) const;
  SourceParams sample(Rng& rng) const;
};

ParticleSet init_from_prior(const PriorBox& prior, std::size_t n, Rng& rng);

/// Renormalizes in place. Returns false (and leaves weights uniform) when the
/// total mass is zero or not finite.
bool normalize(std::span<double> weights);

struct WeightUpdateResult {
  bool degenerate = false;  // every w * p(z | theta) underflowed; reset to uniform
  double ess = 0.0;         // effective sample size after the update
};

/// Bootstrap reweighting w <- w p(z | theta), evaluated in the log domain and
/// renormalized. Particle values are untouched.
WeightUpdateResult weight_update(ParticleSet& ps, double z, const Pose& pose,
                                 const SensorNoise& noise);

/// Same update from precomputed log-likelihoods, one per particle.
WeightUpdateResult weight_update_log(std::span<double> weights,
                                     std::span<const double> log_lik);

double ess(std::span<const double> weights);
inline double ess(const ParticleSet& ps) { return ess(ps.weights); }

/// Systematic (low-variance) resampling indices: one uniform offset, N evenly
/// spaced pointers through the cumulative weights.
std::vector<std::size_t> systematic_indices(std::span<const double> weights,
                                            std::size_t count, Rng& rng);

/// Resamples in place and resets weights to 1/N.
void resample_systematic(ParticleSet& ps, Rng& rng);

struct Moments {
  Vec7 mean = Vec7::Zero();
  Mat7 cov = Mat7::Zero();
};

/// Weighted mean and covariance plus ridge * I.
Moments mean_cov(const ParticleSet& ps, double ridge);
Moments mean_cov(std::span<const SourceParams> particles,
                 std::span<const double> weights, double ridge);

inline constexpr double kEntropyEps = 1e-12;

/// H = -sum w log(w + eps).
double weight_entropy(std::span<const double> weights, double eps = kEntropyEps);
inline double weight_entropy(const ParticleSet& ps, double eps = kEntropyEps) {
  return weight_entropy(ps.weights, eps);
}

}  // namespace depf
