#include "depf/depf.hpp"
#include "depf/plume_model.hpp"

#include <doctest.h>

#include <array>
#include <cmath>

using namespace depf;

namespace {

const Box2 kDomain{0, 30, 0, 30};
const PriorBox kPrior = PriorBox::with_default_marginals({0, 20, 0, 20});

ParticleSet uniform_set(std::vector<SourceParams> ps) {
  ParticleSet s;
  s.weights.assign(ps.size(), 1.0 / static_cast<double>(ps.size()));
  s.particles = std::move(ps);
  return s;
}

SourceParams src(double x, double y, double q = 100) {
  return SourceParams::make(x, y, q, 0, 0, 1, 2);
}

// Source strength that puts the expected reading at `h` for a unit-q source
// seen from `pose`.
double q_for_reading(double h, const Pose& pose, const SourceParams& base) {
  SourceParams unit = base;
  unit.q = 1.0;
  return h / expected_reading(pose, unit);
}

double total_variation(std::span<const double> a, std::span<const double> b) {
  double tv = 0;
  for (std::size_t i = 0; i < a.size(); ++i) tv += std::abs(a[i] - b[i]);
  return 0.5 * tv;
}

}  // namespace

TEST_CASE("config parsing and validation") {
  CHECK(parse_reg_mode("additive") == RegMode::kAdditive);
  CHECK(parse_mh_mode(to_string(MhMode::kMainText)) == MhMode::kMainText);
  CHECK(parse_injection_trigger("always") == InjectionTrigger::kAlways);
  CHECK_THROWS_AS(parse_reg_mode("none"), ConfigError);

  DepfConfig c;
  CHECK_NOTHROW(c.validate());
  c.beta_min = 0.5;
  c.beta_max = 0.4;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.ridge_lambda = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.exploratory_ratio = 1e-4;
  CHECK_THROWS_AS(c.exploratory_count(1000), ConfigError);
  c.exploratory_ratio = 0.05;
  CHECK(c.exploratory_count(1000) == 50);
}

TEST_CASE("support box") {
  DepfConfig c;
  SUBCASE("collapsed cloud uses the extent floor") {
    const auto b = compute_support_box(uniform_set({src(5, 5), src(5, 5)}), c, kDomain);
    CHECK(b.box.x_lo == 0);
    CHECK(b.box.x_hi == doctest::Approx(5.3));
    CHECK(b.box.y_hi == doctest::Approx(5.3));
  }
  SUBCASE("zero margin") {
    c.delta_margin = 0;
    const auto b = compute_support_box(uniform_set({src(2, 7), src(4, 3)}), c, kDomain);
    CHECK(b.box == Box2{0, 4, 0, 7});
  }
  SUBCASE("prior-wide cloud") {
    const auto b = compute_support_box(uniform_set({src(0, 0), src(20, 20)}), c, kDomain);
    CHECK(b.box.x_hi == doctest::Approx(26));
    CHECK(b.box.y_hi == doctest::Approx(26));
    const auto clipped = compute_support_box(uniform_set({src(0, 0), src(28, 20)}), c, kDomain);
    CHECK(clipped.box.x_hi == 30);
  }
  SUBCASE("always contains the cloud") {
    Rng rng(4);
    for (int rep = 0; rep < 100; ++rep) {
      auto ps = init_from_prior(kPrior, 20, rng);
      const auto b = compute_support_box(ps, c, kDomain);
      CHECK(b.box.contains(ps.positional_bounds()));
      CHECK(kDomain.contains(b.box));
    }
  }
}

TEST_CASE("exploratory injection") {
  Rng rng(8);
  DepfConfig c;
  c.epsilon_explore = 0.01;
  auto ps = init_from_prior(kPrior, 1000, rng);
  const SupportBox box{{0, 26, 0, 26}};
  const auto idx = inject_exploratory(ps, box, kPrior, c, rng);
  REQUIRE(idx.size() == 50);
  ps.check_invariants(1e-9);

  // 950 untouched weights carry (1 - eps) * 0.95, the explorers eps in total
  const double total = 0.99 * 0.95 + 0.01;
  for (auto i : idx) {
    CHECK(ps.weights[i] == doctest::Approx(2e-4 / total).epsilon(1e-12));
    CHECK(box.box.contains(ps.particles[i].x, ps.particles[i].y));
    CHECK(ps.particles[i].valid());
    CHECK(ps.particles[i].q >= 10);
    CHECK(ps.particles[i].q <= 3000);
  }
  std::vector<char> hit(1000, 0);
  for (auto i : idx) hit[i] = 1;
  for (std::size_t i = 0; i < 1000; ++i)
    if (!hit[i]) CHECK(ps.weights[i] == doctest::Approx(0.99e-3 / total).epsilon(1e-12));
}

TEST_CASE("weight regularization") {
  SUBCASE("tempering at T = 2") {
    std::vector<double> w = {0.8, 0.2};
    temper_weights(w, 2.0);
    CHECK(w[0] == doctest::Approx(2.0 / 3).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(1.0 / 3).epsilon(1e-12));
  }
  SUBCASE("uniform weights sit above the target: T = 1") {
    std::vector<double> w(100, 0.01);
    CHECK(regularize_weights(w, DepfConfig{}) == 1.0);
    for (double v : w) CHECK(v == 0.01);
  }
  SUBCASE("additive mode clamps to beta_min at the target") {
    DepfConfig c;
    c.reg_mode = RegMode::kAdditive;
    c.h_target_frac = 1.0;
    std::vector<double> w(64, 1.0 / 64);
    CHECK(regularize_weights(w, c) == c.beta_min);
  }
  SUBCASE("temperature follows the entropy gap") {
    std::vector<double> w(10, 0.0);
    w[0] = 1.0;
    DepfConfig c;
    // H = 0, so the gap is 1 and T = 2
    CHECK(regularize_weights(w, c) == doctest::Approx(2.0));
  }
  SUBCASE("entropy never decreases") {
    Rng rng(21);
    for (auto mode : {RegMode::kTempering, RegMode::kAdditive}) {
      DepfConfig c;
      c.reg_mode = mode;
      for (int rep = 0; rep < 300; ++rep) {
        std::vector<double> w(50);
        const double spread = uniform(rng, 0.1, 30);
        for (double& v : w) v = std::exp(spread * std_normal(rng));
        normalize(w);
        const double before = weight_entropy(w);
        regularize_weights(w, c);
        CHECK(weight_entropy(w) >= before - 1e-12);
        double s = 0;
        for (double v : w) s += v;
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("kernel bandwidth") {
  DepfConfig c;
  CHECK(kernel_bandwidth(3000, 7, c) == doctest::Approx(0.2414).epsilon(1e-4 / 0.2414));
  c.bandwidth_A = 1.0;
  CHECK(kernel_bandwidth(1, 7, c) == 1.0);
  CHECK(kernel_bandwidth(10000, 7, c) < kernel_bandwidth(1000, 7, c));
  CHECK_THROWS_AS(kernel_bandwidth(0, 7, c), ConfigError);
}

TEST_CASE("diffusion") {
  Rng rng(31);
  SUBCASE("vanishing bandwidth keeps particles") {
    auto ps = init_from_prior(kPrior, 50, rng);
    const auto prop = diffuse_with(ps, Mat7::Identity(), 0.0, rng);
    for (std::size_t i = 0; i < ps.size(); ++i) CHECK(prop.proposed[i] == ps.particles[i]);
  }
  SUBCASE("unit covariance gives standard normal steps") {
    auto ps = uniform_set(std::vector<SourceParams>(100000, src(10, 10)));
    const auto prop = diffuse_with(ps, Mat7::Identity(), 1.0, rng);
    for (std::size_t k = 0; k < kStateDim; ++k) {
      double m = 0, v = 0;
      for (const auto& d : prop.deltas) m += d[k] / 1e5;
      for (const auto& d : prop.deltas) v += (d[k] - m) * (d[k] - m) / (1e5 - 1);
      CHECK(v >= 0.97);
      CHECK(v <= 1.03);
    }
  }
  SUBCASE("empirical covariance matches h^2 Sigma") {
    auto ps = init_from_prior(kPrior, 100000, rng);
    DepfConfig c;
    const auto prop = diffuse(ps, c, rng);
    const double h = kernel_bandwidth(ps.size(), kStateDim, c);
    Mat7 emp = Mat7::Zero();
    for (const auto& d : prop.deltas) emp += d * d.transpose();
    emp /= static_cast<double>(prop.deltas.size());
    const Mat7 expect = h * h * prop.cov;
    CHECK((emp - expect).norm() / expect.norm() < 0.05);
  }
  SUBCASE("singular covariance is a numerical error") {
    auto ps = uniform_set({src(1, 1), src(2, 2)});
    CHECK_THROWS_AS(diffuse_with(ps, Mat7::Zero(), 1.0, rng), NumericalError);
  }
}

TEST_CASE("mh acceptance probability") {
  CHECK(mh_acceptance(0, std::log(2.0), MhMode::kLikelihoodRatio) == 1.0);
  CHECK(mh_acceptance(0, std::log(0.5), MhMode::kLikelihoodRatio) == doctest::Approx(0.5));
  CHECK(mh_acceptance(0, 0, MhMode::kMainText, 2.0) == doctest::Approx(std::exp(-1.0)));
  const double ninf = -std::numeric_limits<double>::infinity();
  CHECK(mh_acceptance(ninf, ninf, MhMode::kLikelihoodRatio) == 0.0);
}

TEST_CASE("mh validation") {
  Rng rng(77);
  const Pose pose{0, 0};
  SensorNoise noise;
  noise.p_d = 1.0;
  const DepfConfig cfg;
  const Box2 wide{-100, 100, -100, 100};

  SUBCASE("zero step accepts everything") {
    auto ps = init_from_prior(kPrior, 200, rng);
    const auto before = ps;
    const auto prop = diffuse_with(ps, Mat7::Identity(), 0.0, rng);
    const auto st = mh_validate(ps, prop, 1.0, pose, noise, cfg, kDomain, rng);
    CHECK(st.accepted == st.proposed);
    CHECK(ps == before);
  }
  SUBCASE("likelihood ratio 0.5 accepts half the time") {
    // two states whose readings differ so that p(z|b) / p(z|a) = 0.5
    const double z = 2.0, sb = noise.sigma_bar;
    const double ha = z, hb = z - sb * std::sqrt(2 * std::log(2.0));
    const SourceParams a = SourceParams::make(5, 0, 1, 0, 0, 1, 2);
    SourceParams b = a;
    SourceParams qa = a, qb = b;
    qa.q = q_for_reading(ha, pose, a);
    qb.q = q_for_reading(hb, pose, b);
    REQUIRE(likelihood(z, pose, qb, noise) / likelihood(z, pose, qa, noise) ==
            doctest::Approx(0.5).epsilon(1e-9));

    const std::size_t n = 100000;
    auto ps = uniform_set(std::vector<SourceParams>(n, qa));
    DiffusionProposal prop;
    prop.cov = Mat7::Identity();
    prop.proposed.assign(n, qb);
    prop.deltas.assign(n, qb.to_vec() - qa.to_vec());
    const auto st = mh_validate(ps, prop, z, pose, noise, cfg, wide, rng);
    CHECK(std::abs(st.acceptance() - 0.5) <= 0.005);
    for (double w : ps.weights) REQUIRE(w == 1.0 / n);
  }
  SUBCASE("proposals outside the domain are rejected") {
    auto ps = uniform_set({src(29.9, 5)});
    DiffusionProposal prop;
    prop.cov = Mat7::Identity();
    prop.proposed = {src(31, 5)};
    prop.deltas = {prop.proposed[0].to_vec() - ps.particles[0].to_vec()};
    const auto st = mh_validate(ps, prop, 0.0, pose, noise, cfg, kDomain, rng);
    CHECK(st.accepted == 0);
    CHECK(ps.particles[0].x == 29.9);
  }
}

TEST_CASE("mh kernel is stationary on a five-state target") {
  // state k is a source strength whose likelihood is proportional to pi_k
  const std::array<double, 5> pi = {0.1, 0.3, 0.15, 0.25, 0.2};
  const Pose pose{0, 0};
  SensorNoise noise;
  noise.p_d = 1.0;
  const double z = 3.0;
  const SourceParams base = SourceParams::make(4, 0, 1, 0, 0, 1, 2);
  std::array<SourceParams, 5> states;
  for (std::size_t k = 0; k < 5; ++k) {
    const double h = z - noise.sigma_bar * std::sqrt(2 * std::log(0.3 / pi[k]));
    states[k] = base;
    states[k].q = q_for_reading(h, pose, base);
  }
  for (std::size_t k = 1; k < 5; ++k)
    REQUIRE(likelihood(z, pose, states[k], noise) / likelihood(z, pose, states[0], noise) ==
            doctest::Approx(pi[k] / pi[0]).epsilon(1e-9));

  Rng rng(123);
  auto ps = uniform_set({states[0]});
  std::size_t cur = 0;
  std::array<double, 5> freq{};
  const int steps = 100000;
  DiffusionProposal prop;
  prop.cov = Mat7::Identity();
  prop.proposed.resize(1);
  prop.deltas.resize(1);
  for (int t = 0; t < steps; ++t) {
    // symmetric nearest-neighbour move on a ring
    const std::size_t next = uniform01(rng) < 0.5 ? (cur + 1) % 5 : (cur + 4) % 5;
    prop.proposed[0] = states[next];
    prop.deltas[0] = states[next].to_vec() - states[cur].to_vec();
    mh_validate(ps, prop, z, pose, noise, DepfConfig{}, Box2{}, rng);
    if (ps.particles[0] == states[next]) cur = next;
    freq[cur] += 1.0 / steps;
  }
  const double tv = total_variation(freq, pi);
  MESSAGE("TV = " << tv);
  CHECK(tv <= 0.02);
}

TEST_CASE("depf_step") {
  const SensorNoise noise;
  const auto truth = SourceParams::make(25, 24, 2500, 1, 3.9, 2, 6);

  SUBCASE("preserves normalization and particle invariants") {
    Rng rng(5);
    auto ps = init_from_prior(kPrior, 500, rng);
    DepfState st;
    for (int k = 0; k < 40; ++k) {
      const Pose pose{uniform(rng, 0, 30), uniform(rng, 0, 30)};
      depf_step(ps, st, sample_measurement(pose, truth, noise, rng), pose, noise, kPrior,
                DepfConfig{}, kDomain, rng);
      ps.check_invariants(1e-9);
      for (const auto& p : ps.particles) {
        REQUIRE(p.valid());
        REQUIRE(kDomain.contains(p.x, p.y));
      }
    }
    CHECK(st.steps == 40);
  }

  SUBCASE("trigger uses the previous update's ESS") {
    Rng rng(6);
    auto ps = init_from_prior(kPrior, 200, rng);
    DepfState st;
    DepfConfig c;
    auto info = depf_step(ps, st, 0.0, {5, 5}, noise, kPrior, c, kDomain, rng);
    CHECK_FALSE(info.injected);
    st.last_ess_frac = 0.1;
    info = depf_step(ps, st, 0.0, {5, 5}, noise, kPrior, c, kDomain, rng);
    CHECK(info.injected);
    c.trigger = InjectionTrigger::kAlways;
    st.last_ess_frac = 1.0;
    info = depf_step(ps, st, 0.0, {5, 5}, noise, kPrior, c, kDomain, rng);
    CHECK(info.injected);
  }

  SUBCASE("with every extra stage off it is the bootstrap filter") {
    DepfConfig c;
    c.trigger_ess_frac = 1e-300;
    c.enable_regularization = false;
    c.enable_diffusion = false;
    Rng r1(9), r2(9), obs(10);
    auto a = init_from_prior(kPrior, 300, r1);
    auto b = init_from_prior(kPrior, 300, r2);
    DepfState st;
    for (int k = 0; k < 30; ++k) {
      const Pose pose{uniform(obs, 0, 30), uniform(obs, 0, 30)};
      const double z = sample_measurement(pose, truth, noise, obs);
      depf_step(a, st, z, pose, noise, kPrior, c, kDomain, r1);
      weight_update(b, z, pose, noise);
      if (ess(b) / b.size() < c.resample_ess_frac) resample_systematic(b, r2);
      CHECK(a.particles == b.particles);
      CHECK(a.weights == b.weights);
    }
  }

  SUBCASE("identical seeds give identical trajectories") {
    auto run = [&](std::uint64_t seed) {
      Rng rng(seed);
      auto ps = init_from_prior(kPrior, 300, rng);
      DepfState st;
      for (int k = 0; k < 25; ++k) {
        const Pose pose{uniform(rng, 0, 30), uniform(rng, 0, 30)};
        depf_step(ps, st, sample_measurement(pose, truth, noise, rng), pose, noise, kPrior,
                  DepfConfig{}, kDomain, rng);
      }
      return ps.fingerprint();
    };
    CHECK(run(3) == run(3));
    CHECK(run(3) != run(4));
  }

  SUBCASE("support reaches a source outside the prior box") {
    // readings scattered around a source at (25, 24); bootstrap can never get
    // closer than the prior corner (20, 20), about 6.4 units away
    int reached = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(seed);
      auto truth = kPrior.sample(rng);
      truth.x = 25;
      truth.y = 24;
      auto ps = init_from_prior(kPrior, 1000, rng);
      DepfState st;
      for (int k = 0; k < 50; ++k) {
        const Pose pose{std::clamp(truth.x + uniform(rng, -10, 10), 0.0, 30.0),
                        std::clamp(truth.y + uniform(rng, -10, 10), 0.0, 30.0)};
        depf_step(ps, st, sample_measurement(pose, truth, noise, rng), pose, noise, kPrior,
                  DepfConfig{}, kDomain, rng);
      }
      double best = 1e9;
      for (const auto& p : ps.particles)
        best = std::min(best, std::hypot(p.x - truth.x, p.y - truth.y));
      reached += best <= 2.0;
    }
    MESSAGE("reached " << reached << "/20");
    CHECK(reached >= 16);
  }
}
