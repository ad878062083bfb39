#include "depf/filter_core.hpp"

#include "depf/log.hpp"
#include "depf/plume_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

namespace depf {

void ParticleSet::check_invariants(double sum_tol) const {
  if (particles.empty()) throw NumericalError("particle set is empty");
  if (particles.size() != weights.size())
    throw NumericalError("particle and weight counts differ");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw NumericalError("invalid weight");
    total += w;
  }
  if (std::abs(total - 1.0) > sum_tol) throw NumericalError("weights are not normalized");
}

Box2 ParticleSet::positional_bounds() const {
  Box2 b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
         std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& p : particles) {
    b.x_lo = std::min(b.x_lo, p.x);
    b.x_hi = std::max(b.x_hi, p.x);
    b.y_lo = std::min(b.y_lo, p.y);
    b.y_hi = std::max(b.y_hi, p.y);
  }
  return b;
}

std::uint64_t ParticleSet::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  feed(particles.data(), particles.size() * sizeof(SourceParams));
  feed(weights.data(), weights.size() * sizeof(double));
  feed(&generation, sizeof(generation));
  return h;
}

PriorBox PriorBox::with_default_marginals(const Box2& positional) {
  PriorBox b;
  b.lower << positional.x_lo, positional.y_lo, 10.0, 0.0, 0.0, 1.0, 0.5;
  b.upper << positional.x_hi, positional.y_hi, 3000.0, 6.0, kTwoPi, 5.0, 8.0;
  return b;
}

void PriorBox::validate() const {
  for (std::size_t i = 0; i < kStateDim; ++i) {
    if (!(lower[i] < upper[i]))
      throw ConfigError("prior box is degenerate in dimension " + std::to_string(i));
  }
}

bool PriorBox::contains(const SourceParams& p) const {
  const Vec7 v = p.to_vec();
  return ((v - lower).array() >= 0.0).all() && ((upper - v).array() >= 0.0).all();
}

double PriorBox::sample_dim(std::size_t dim, Rng& rng) const {
  return uniform(rng, lower[dim], upper[dim]);
}

SourceParams PriorBox::sample(Rng& rng) const {
  Vec7 v;
  for (std::size_t i = 0; i < kStateDim; ++i) v[i] = sample_dim(i, rng);
  return clamp_physical(SourceParams::from_vec(v));
}

ParticleSet init_from_prior(const PriorBox& prior, std::size_t n, Rng& rng) {
  if (n < 1) throw ConfigError("particle count must be >= 1");
  prior.validate();
  ParticleSet ps;
  ps.particles.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ps.particles.push_back(prior.sample(rng));
  ps.weights.assign(n, 1.0 / static_cast<double>(n));
  return ps;
}

bool normalize(std::span<double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total)) {
    std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(weights.size()));
    return false;
  }
  for (double& w : weights) w /= total;
  return true;
}

WeightUpdateResult weight_update_log(std::span<double> weights,
                                     std::span<const double> log_lik) {
  // Threshold below which exp() of a log-mass is exactly zero in double.
  static const double kLogUnderflow = std::log(std::numeric_limits<double>::denorm_min());
  const std::size_t n = weights.size();
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double lw = weights[i] > 0.0 ? std::log(weights[i]) + log_lik[i]
                                       : -std::numeric_limits<double>::infinity();
    weights[i] = lw;
    if (lw > max_log) max_log = lw;
  }
  WeightUpdateResult res;
  if (!(max_log >= kLogUnderflow)) {
    std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(n));
    res.degenerate = true;
    spdlog::debug("weight_update: all likelihoods vanished, weights reset to uniform");
  } else {
    for (double& w : weights) w = std::exp(w - max_log);
    normalize(weights);
  }
  res.ess = ess(weights);
  return res;
}

WeightUpdateResult weight_update(ParticleSet& ps, double z, const Pose& pose,
                                 const SensorNoise& noise) {
  const MixtureLogLik loglik(noise);
  std::vector<double> ll(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i)
    ll[i] = loglik(z, expected_reading(pose, ps.particles[i]));
  return weight_update_log(ps.weights, ll);
}

double ess(std::span<const double> weights) {
  double s2 = 0.0;
  for (double w : weights) s2 += w * w;
  return 1.0 / s2;
}

std::vector<std::size_t> systematic_indices(std::span<const double> weights,
                                            std::size_t count, Rng& rng) {
  std::vector<std::size_t> idx(count);
  const double step = 1.0 / static_cast<double>(count);
  double u = uniform01(rng) * step;
  double cumulative = weights.empty() ? 0.0 : weights[0];
  std::size_t j = 0;
  const std::size_t last = weights.size() - 1;
  for (std::size_t i = 0; i < count; ++i) {
    while (u > cumulative && j < last) cumulative += weights[++j];
    idx[i] = j;
    u += step;
  }
  return idx;
}

void resample_systematic(ParticleSet& ps, Rng& rng) {
  const std::size_t n = ps.size();
  const auto idx = systematic_indices(ps.weights, n, rng);
  std::vector<SourceParams> next;
  next.reserve(n);
  for (auto i : idx) next.push_back(ps.particles[i]);
  ps.particles = std::move(next);
  ps.weights.assign(n, 1.0 / static_cast<double>(n));
}

Moments mean_cov(std::span<const SourceParams> particles, std::span<const double> weights,
                 double ridge) {
  Moments m;
  for (std::size_t i = 0; i < particles.size(); ++i) m.mean += weights[i] * particles[i].to_vec();
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const Vec7 d = particles[i].to_vec() - m.mean;
    m.cov.selfadjointView<Eigen::Lower>().rankUpdate(d, weights[i]);
  }
  m.cov.triangularView<Eigen::StrictlyUpper>() = m.cov.transpose();
  m.cov.diagonal().array() += ridge;
  return m;
}

Moments mean_cov(const ParticleSet& ps, double ridge) {
  return mean_cov(ps.particles, ps.weights, ridge);
}

double weight_entropy(std::span<const double> weights, double eps) {
  double h = 0.0;
  for (double w : weights)
    if (w > 0.0) h -= w * std::log(w + eps);
  return std::max(h, 0.0);
}

}  // namespace depf
