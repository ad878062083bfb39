#include "depf/environment.hpp"
#include "depf/plume_model.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace depf;

namespace {

// Kolmogorov-Smirnov statistic against U(lo, hi).
double ks_uniform(std::vector<double> xs, double lo, double hi) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = (xs[i] - lo) / (hi - lo);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

}  // namespace

TEST_CASE("scenario geometry") {
  const auto severe = make_scenario(ScenarioName::kSevere, Scale::kSmall);
  CHECK(severe.domain == Box2{0, 30, 0, 30});
  CHECK(severe.prior_box == Box2{0, 20, 0, 20});
  REQUIRE(severe.true_region.size() == 2);
  CHECK(severe.true_region[0] == Box2{15, 30, 20, 30});
  CHECK(severe.true_region[1] == Box2{20, 30, 15, 20});
  for (const auto& b : severe.true_region) CHECK(severe.prior_box.intersect(b).empty());
  CHECK(severe.step_budget == 100);
  CHECK(severe.start_box == Box2{0, 5, 0, 5});

  const auto none = make_scenario(ScenarioName::kNoError, Scale::kSmall);
  for (const auto& b : none.true_region) CHECK(none.prior_box.contains(b));

  const auto mod = make_scenario(ScenarioName::kModerate, Scale::kSmall);
  REQUIRE(mod.true_region.size() == 1);
  const Box2 overlap = mod.prior_box.intersect(mod.true_region[0]);
  CHECK(overlap == Box2{10, 20, 10, 20});
  CHECK(overlap.area() == 100);
  CHECK(mod.true_region_area() == 225);

  const auto large = make_scenario(ScenarioName::kSevere, Scale::kLarge);
  CHECK(large.domain == Box2{0, 300, 0, 300});
  CHECK(large.step_budget == 300);
  CHECK(large.success_radius == 10.0);
  CHECK(large.true_region[1] == Box2{200, 300, 150, 200});

  for (auto n : {ScenarioName::kNoError, ScenarioName::kModerate, ScenarioName::kSevere})
    for (auto s : {Scale::kSmall, Scale::kLarge}) CHECK_NOTHROW(make_scenario(n, s).validate());

  CHECK(parse_scenario("moderate") == ScenarioName::kModerate);
  CHECK(parse_scale(to_string(Scale::kLarge)) == Scale::kLarge);
  CHECK_THROWS_AS(parse_scenario("apocalyptic"), ConfigError);
}

TEST_CASE("source sampling") {
  const auto sc = make_scenario(ScenarioName::kSevere, Scale::kSmall);
  Rng rng(42);
  const int n = 10000;
  int box1 = 0;
  std::vector<double> q, u, d, phi, tau;
  for (int i = 0; i < n; ++i) {
    const auto s = sample_source(sc, rng);
    REQUIRE(s.valid());
    CHECK_FALSE(sc.prior_box.contains(s.x, s.y));
    CHECK((sc.true_region[0].contains(s.x, s.y) || sc.true_region[1].contains(s.x, s.y)));
    box1 += sc.true_region[0].contains(s.x, s.y) && s.y > 20;
    q.push_back(s.q);
    u.push_back(s.u);
    d.push_back(s.d);
    phi.push_back(s.phi);
    tau.push_back(s.tau);
  }
  CHECK(std::abs(box1 / double(n) - 0.75) <= 0.015);
  CHECK(*std::min_element(q.begin(), q.end()) >= 10);
  CHECK(*std::max_element(q.begin(), q.end()) <= 3000);

  // critical value at level 0.01: 1.628 / sqrt(n)
  const double crit = 1.628 / std::sqrt(double(n));
  CHECK(ks_uniform(q, 10, 3000) < crit);
  CHECK(ks_uniform(u, 0, 6) < crit);
  CHECK(ks_uniform(d, 1, 5) < crit);
  CHECK(ks_uniform(phi, 0, 2 * std::numbers::pi) < crit);
  CHECK(ks_uniform(tau, 0.5, 8) < crit);
}

TEST_CASE("agent kinematics") {
  const auto sc = make_scenario(ScenarioName::kNoError, Scale::kSmall);
  EpisodeState s;
  s.pose = {5, 5};
  s = step_agent(s, Action::kE, sc);
  CHECK(s.pose == Pose{6, 5});
  CHECK(s.distance_traveled == 1.0);
  CHECK(s.step == 1);

  s.pose = {30, 7};
  s = step_agent(s, Action::kE, sc);
  CHECK(s.pose == Pose{30, 7});
  CHECK(s.distance_traveled == 1.0);

  s.pose = {0, 0};
  s = step_agent(s, Action::kNE, sc);
  CHECK(s.pose.x == doctest::Approx(1 / std::numbers::sqrt2));
  CHECK(s.distance_traveled == doctest::Approx(2.0));

  s.step = sc.step_budget;
  CHECK_THROWS_AS(step_agent(s, Action::kN, sc), ProtocolError);

  Rng rng(3);
  EpisodeState w;
  w.pose = sample_start(sc, rng);
  CHECK(sc.start_box.contains(w.pose.x, w.pose.y));
  double walked = 0;
  for (int k = 0; k < sc.step_budget; ++k) {
    const Pose before = w.pose;
    w = step_agent(w, kAllActions[std::uniform_int_distribution<int>(0, 7)(rng)], sc);
    const double moved = std::hypot(w.pose.x - before.x, w.pose.y - before.y);
    CHECK(moved <= 1.0 + 1e-12);
    walked += moved;
    CHECK(sc.domain.contains(w.pose.x, w.pose.y));
  }
  CHECK(w.distance_traveled == doctest::Approx(walked));
}

TEST_CASE("observation delegates to the sensor model") {
  EpisodeState s;
  s.true_theta = SourceParams::make(10, 10, 1000, 1, 0, 2, 3);
  s.pose = {8, 9};
  Rng a(1), b(1);
  const auto obs = observe(s, SensorNoise{}, a);
  CHECK(obs.pose == s.pose);
  CHECK(obs.z == sample_measurement(s.pose, s.true_theta, SensorNoise{}, b));
}
