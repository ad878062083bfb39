#pragma once

#include "depf/planners.hpp"
#include "depf/random.hpp"
#include "depf/types.hpp"

#include <string_view>
#include <vector>

namespace depf {

enum class ScenarioName { kNoError, kModerate, kSevere };
enum class Scale { kSmall, kLarge };

std::string_view to_string(ScenarioName s);
std::string_view to_string(Scale s);
ScenarioName parse_scenario(std::string_view s);
Scale parse_scale(std::string_view s);

struct Scenario {
  ScenarioName name = ScenarioName::kNoError;
  Scale scale = Scale::kSmall;
  Box2 domain;
  Box2 prior_box;
  std::vector<Box2> true_region;  // disjoint axis-aligned boxes
  Box2 start_box;
  int step_budget = 100;
  double success_radius = 1.0;

  double true_region_area() const;
  void validate() const;
};

/// Small scale: 30 x 30 domain, budget 100. Large scale multiplies every
/// positional quantity by 10 and uses a budget of 300.
Scenario make_scenario(ScenarioName name, Scale scale);

/// Position uniform over the true region (boxes picked by area), other
/// dimensions from the default marginals.
SourceParams sample_source(const Scenario& sc, Rng& rng);

Pose sample_start(const Scenario& sc, Rng& rng);

struct EpisodeState {
  SourceParams true_theta;
  Pose pose;
  int step = 0;
  double distance_traveled = 0.0;
  double wall_time_accumulated = 0.0;
};

/// Moves one unit (clamped to the domain). Throws ProtocolError past budget.
EpisodeState step_agent(const EpisodeState& state, Action a, const Scenario& sc);

struct Observation {
  Pose pose;
  double z = 0.0;
};

Observation observe(const EpisodeState& state, const SensorNoise& noise, Rng& rng);

}  // namespace depf
