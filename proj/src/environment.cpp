#include "depf/environment.hpp"

#include "depf/filter_core.hpp"
#include "depf/plume_model.hpp"

#include <cmath>

namespace depf {

std::string_view to_string(ScenarioName s) {
  switch (s) {
    case ScenarioName::kNoError: return "no_error";
    case ScenarioName::kModerate: return "moderate";
    case ScenarioName::kSevere: return "severe";
  }
  return "?";
}

std::string_view to_string(Scale s) { return s == Scale::kSmall ? "small" : "large"; }

ScenarioName parse_scenario(std::string_view s) {
  for (auto n : {ScenarioName::kNoError, ScenarioName::kModerate, ScenarioName::kSevere})
    if (to_string(n) == s) return n;
  throw ConfigError("unknown scenario: " + std::string(s));
}

Scale parse_scale(std::string_view s) {
  if (s == "small") return Scale::kSmall;
  if (s == "large") return Scale::kLarge;
  throw ConfigError("unknown scale: " + std::string(s));
}

double Scenario::true_region_area() const {
  double a = 0.0;
  for (const auto& b : true_region) a += b.area();
  return a;
}

void Scenario::validate() const {
  if (domain.empty()) throw ConfigError("scenario domain is empty");
  if (!domain.contains(prior_box) || !domain.contains(start_box))
    throw ConfigError("prior and start boxes must lie inside the domain");
  if (true_region.empty()) throw ConfigError("scenario needs a true region");
  for (const auto& b : true_region)
    if (b.empty() || !domain.contains(b)) throw ConfigError("bad true-region box");
  if (step_budget <= 0) throw ConfigError("step_budget must be > 0");
  if (!(success_radius > 0.0)) throw ConfigError("success_radius must be > 0");
}

Scenario make_scenario(ScenarioName name, Scale scale) {
  Scenario sc;
  sc.name = name;
  sc.scale = scale;
  sc.domain = {0, 30, 0, 30};
  sc.prior_box = {0, 20, 0, 20};
  sc.start_box = {0, 5, 0, 5};
  switch (name) {
    case ScenarioName::kNoError: sc.true_region = {{10, 20, 10, 20}}; break;
    case ScenarioName::kModerate: sc.true_region = {{10, 25, 10, 25}}; break;
    case ScenarioName::kSevere: sc.true_region = {{15, 30, 20, 30}, {20, 30, 15, 20}}; break;
  }
  sc.step_budget = 100;
  sc.success_radius = 1.0;
  if (scale == Scale::kLarge) {
    const double s = 10.0;
    sc.domain = sc.domain.scaled(s);
    sc.prior_box = sc.prior_box.scaled(s);
    sc.start_box = sc.start_box.scaled(s);
    for (auto& b : sc.true_region) b = b.scaled(s);
    sc.step_budget = 300;
    sc.success_radius = 10.0;
  }
  return sc;
}

SourceParams sample_source(const Scenario& sc, Rng& rng) {
  double pick = uniform01(rng) * sc.true_region_area();
  const Box2* box = &sc.true_region.back();
  for (const auto& b : sc.true_region) {
    if (pick < b.area()) {
      box = &b;
      break;
    }
    pick -= b.area();
  }
  SourceParams p = PriorBox::with_default_marginals(*box).sample(rng);
  return p;
}

Pose sample_start(const Scenario& sc, Rng& rng) {
  return {uniform(rng, sc.start_box.x_lo, sc.start_box.x_hi),
          uniform(rng, sc.start_box.y_lo, sc.start_box.y_hi)};
}

EpisodeState step_agent(const EpisodeState& state, Action a, const Scenario& sc) {
  if (state.step >= sc.step_budget)
    throw ProtocolError("step_agent called past the step budget");
  EpisodeState next = state;
  next.pose = apply_action(state.pose, a, sc.domain);
  next.distance_traveled += std::hypot(next.pose.x - state.pose.x, next.pose.y - state.pose.y);
  ++next.step;
  return next;
}

Observation observe(const EpisodeState& state, const SensorNoise& noise, Rng& rng) {
  return {state.pose, sample_measurement(state.pose, state.true_theta, noise, rng)};
}

}  // namespace depf
