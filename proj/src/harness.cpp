#include "depf/harness.hpp"

#include "depf/log.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace depf {

using Json = nlohmann::ordered_json;

namespace {

// Stream tags for derive_seed; one independent generator per concern so the
// source and start pose depend on the seed only.
constexpr std::uint64_t kStreamSource = 1;
constexpr std::uint64_t kStreamSensor = 2;
constexpr std::uint64_t kStreamFilter = 3;
constexpr std::uint64_t kStreamPlanner = 4;

Json vec7_json(const Vec7& v) {
  Json a = Json::array();
  for (std::size_t i = 0; i < kStateDim; ++i) a.push_back(v[i]);
  return a;
}

Json to_json(const ExperimentConfig& c) {
  const auto& n = c.filter.noise;
  const auto& d = c.filter.depf;
  const auto& p = c.filter.perturb;
  const auto& l = c.lookahead;
  Json j;
  j["method"] = to_string(c.method);
  j["planner"] = to_string(c.planner);
  j["scenario"] = to_string(c.scenario);
  j["scale"] = to_string(c.scale);
  j["n_particles"] = c.n_particles;
  j["episodes"] = c.episodes;
  j["base_seed"] = c.base_seed;
  j["parallel"] = c.parallel;
  j["success_radius"] = c.success_radius ? Json(*c.success_radius) : Json(nullptr);
  j["step_budget"] = c.step_budget ? Json(*c.step_budget) : Json(nullptr);
  j["resample_ess_frac"] = c.filter.resample_ess_frac;
  j["noise"] = {{"sigma_bar", n.sigma_bar}, {"sigma", n.sigma}, {"p_d", n.p_d}};
  j["depf"] = {{"exploratory_ratio", d.exploratory_ratio},
               {"delta_margin", d.delta_margin},
               {"margin_floor", d.margin_floor},
               {"epsilon_explore", d.epsilon_explore},
               {"beta_min", d.beta_min},
               {"beta_max", d.beta_max},
               {"h_target_frac", d.h_target_frac},
               {"bandwidth_A", d.bandwidth_A},
               {"ridge_lambda", d.ridge_lambda},
               {"resample_ess_frac", d.resample_ess_frac},
               {"trigger_ess_frac", d.trigger_ess_frac},
               {"reg_mode", to_string(d.reg_mode)},
               {"mh_mode", to_string(d.mh_mode)},
               {"trigger", to_string(d.trigger)},
               {"enable_regularization", d.enable_regularization},
               {"enable_diffusion", d.enable_diffusion},
               {"enable_mh", d.enable_mh}};
  j["perturb"] = {{"jitter_sigma", vec7_json(p.jitter_sigma)},
                  {"rough_K", p.rough_K},
                  {"rejuv_sigma_rm", p.rejuv_sigma_rm},
                  {"rejuv_moves", p.rejuv_moves},
                  {"ridge_lambda", p.ridge_lambda}};
  j["lookahead"] = {{"mc_samples", l.mc_samples},
                    {"step_penalty", l.step_penalty},
                    {"time_penalty", l.time_penalty},
                    {"dcee_lambda", l.dcee_lambda},
                    {"agdc_zeta", l.agdc_zeta},
                    {"agdc_scope", to_string(l.agdc_scope)},
                    {"lps_gate", l.lps_gate ? Json(*l.lps_gate) : Json(nullptr)},
                    {"ridge", l.ridge}};
  return j;
}

template <class T>
T get_as(const Json& j, std::string_view key) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + std::string(key) + "' has the wrong type");
  }
}

// Walks `src` against the layout of `ref` so every key in src must already
// exist in the defaults; values are type-checked on read-back.
void merge_strict(Json& ref, const Json& src, const std::string& prefix) {
  if (!src.is_object()) throw ConfigError("config section '" + prefix + "' must be an object");
  for (auto it = src.begin(); it != src.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!ref.contains(it.key())) throw ConfigError("unknown config key: " + path);
    Json& slot = ref[it.key()];
    if (slot.is_object())
      merge_strict(slot, it.value(), path);
    else
      slot = it.value();
  }
}

std::optional<double> opt_double(const Json& j, std::string_view key) {
  if (j.is_null()) return std::nullopt;
  return get_as<double>(j, key);
}

ExperimentConfig from_json(const Json& src) {
  Json j = to_json(ExperimentConfig{});
  merge_strict(j, src, "");
  ExperimentConfig c;
  c.method = parse_method(get_as<std::string>(j["method"], "method"));
  c.planner = parse_planner(get_as<std::string>(j["planner"], "planner"));
  c.scenario = parse_scenario(get_as<std::string>(j["scenario"], "scenario"));
  c.scale = parse_scale(get_as<std::string>(j["scale"], "scale"));
  const auto np = get_as<long long>(j["n_particles"], "n_particles");
  if (np < 0) throw ConfigError("n_particles must be >= 100");
  c.n_particles = static_cast<std::size_t>(np);
  c.episodes = get_as<int>(j["episodes"], "episodes");
  c.base_seed = get_as<std::uint64_t>(j["base_seed"], "base_seed");
  c.parallel = get_as<int>(j["parallel"], "parallel");
  c.success_radius = opt_double(j["success_radius"], "success_radius");
  if (!j["step_budget"].is_null()) c.step_budget = get_as<int>(j["step_budget"], "step_budget");
  c.filter.resample_ess_frac = get_as<double>(j["resample_ess_frac"], "resample_ess_frac");

  const Json& n = j["noise"];
  c.filter.noise.sigma_bar = get_as<double>(n["sigma_bar"], "noise.sigma_bar");
  c.filter.noise.sigma = get_as<double>(n["sigma"], "noise.sigma");
  c.filter.noise.p_d = get_as<double>(n["p_d"], "noise.p_d");

  const Json& d = j["depf"];
  auto& dc = c.filter.depf;
  dc.exploratory_ratio = get_as<double>(d["exploratory_ratio"], "depf.exploratory_ratio");
  dc.delta_margin = get_as<double>(d["delta_margin"], "depf.delta_margin");
  dc.margin_floor = get_as<double>(d["margin_floor"], "depf.margin_floor");
  dc.epsilon_explore = get_as<double>(d["epsilon_explore"], "depf.epsilon_explore");
  dc.beta_min = get_as<double>(d["beta_min"], "depf.beta_min");
  dc.beta_max = get_as<double>(d["beta_max"], "depf.beta_max");
  dc.h_target_frac = get_as<double>(d["h_target_frac"], "depf.h_target_frac");
  dc.bandwidth_A = get_as<double>(d["bandwidth_A"], "depf.bandwidth_A");
  dc.ridge_lambda = get_as<double>(d["ridge_lambda"], "depf.ridge_lambda");
  dc.resample_ess_frac = get_as<double>(d["resample_ess_frac"], "depf.resample_ess_frac");
  dc.trigger_ess_frac = get_as<double>(d["trigger_ess_frac"], "depf.trigger_ess_frac");
  dc.reg_mode = parse_reg_mode(get_as<std::string>(d["reg_mode"], "depf.reg_mode"));
  dc.mh_mode = parse_mh_mode(get_as<std::string>(d["mh_mode"], "depf.mh_mode"));
  dc.trigger = parse_injection_trigger(get_as<std::string>(d["trigger"], "depf.trigger"));
  dc.enable_regularization = get_as<bool>(d["enable_regularization"], "depf.enable_regularization");
  dc.enable_diffusion = get_as<bool>(d["enable_diffusion"], "depf.enable_diffusion");
  dc.enable_mh = get_as<bool>(d["enable_mh"], "depf.enable_mh");

  const Json& p = j["perturb"];
  auto& pc = c.filter.perturb;
  const auto sig = get_as<std::vector<double>>(p["jitter_sigma"], "perturb.jitter_sigma");
  if (sig.size() != kStateDim) throw ConfigError("perturb.jitter_sigma needs 7 entries");
  for (std::size_t i = 0; i < kStateDim; ++i) pc.jitter_sigma[i] = sig[i];
  pc.rough_K = get_as<double>(p["rough_K"], "perturb.rough_K");
  pc.rejuv_sigma_rm = get_as<double>(p["rejuv_sigma_rm"], "perturb.rejuv_sigma_rm");
  pc.rejuv_moves = get_as<int>(p["rejuv_moves"], "perturb.rejuv_moves");
  pc.ridge_lambda = get_as<double>(p["ridge_lambda"], "perturb.ridge_lambda");

  const Json& l = j["lookahead"];
  auto& lc = c.lookahead;
  lc.mc_samples = get_as<int>(l["mc_samples"], "lookahead.mc_samples");
  lc.step_penalty = get_as<double>(l["step_penalty"], "lookahead.step_penalty");
  lc.time_penalty = get_as<double>(l["time_penalty"], "lookahead.time_penalty");
  lc.dcee_lambda = get_as<double>(l["dcee_lambda"], "lookahead.dcee_lambda");
  lc.agdc_zeta = get_as<double>(l["agdc_zeta"], "lookahead.agdc_zeta");
  lc.agdc_scope = parse_agdc_scope(get_as<std::string>(l["agdc_scope"], "lookahead.agdc_scope"));
  lc.lps_gate = opt_double(l["lps_gate"], "lookahead.lps_gate");
  lc.ridge = get_as<double>(l["ridge"], "lookahead.ridge");
  return c;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (episodes < 1) throw ConfigError("episodes must be >= 1");
  if (n_particles < 100) throw ConfigError("n_particles must be >= 100");
  if (parallel < 0) throw ConfigError("parallel must be >= 0");
  filter.noise.validate();
  if (!(filter.resample_ess_frac > 0.0 && filter.resample_ess_frac <= 1.0))
    throw ConfigError("resample_ess_frac must lie in (0, 1]");
  filter.depf.validate();
  if (method == Method::kDepf) filter.depf.exploratory_count(n_particles);
  filter.perturb.validate();
  lookahead.validate();
  scenario_instance().validate();
}

Scenario ExperimentConfig::scenario_instance() const {
  Scenario sc = make_scenario(scenario, scale);
  if (success_radius) sc.success_radius = *success_radius;
  if (step_budget) sc.step_budget = *step_budget;
  return sc;
}

std::string config_to_json(const ExperimentConfig& cfg, int indent) {
  return to_json(cfg).dump(indent);
}

ExperimentConfig config_from_json(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

void apply_override(ExperimentConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("override must look like key=value: " + std::string(assignment));
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));

  Json value;
  try {
    value = Json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    value = raw;
  }

  Json patch = value;
  std::string_view rest = key;
  std::vector<std::string> parts;
  while (!rest.empty()) {
    const auto dot = rest.find('.');
    parts.emplace_back(rest.substr(0, dot));
    if (dot == std::string_view::npos) break;
    rest.remove_prefix(dot + 1);
  }
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    if (it->empty()) throw ConfigError("empty path segment in override: " + key);
    Json wrap;
    wrap[*it] = std::move(patch);
    patch = std::move(wrap);
  }
  Json merged = to_json(cfg);
  merge_strict(merged, patch, "");
  cfg = from_json(merged);
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::kAgdc: return "agdc";
    case Termination::kTimeout: return "timeout";
    case Termination::kDegenerate: return "degenerate";
  }
  return "?";
}

EpisodeResult run_episode(const ExperimentConfig& cfg, std::uint64_t seed,
                          const EpisodeObserver& observer) {
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario sc = cfg.scenario_instance();
  EpisodeResult res;
  res.seed = seed;

  Rng source_rng = make_rng(seed, {kStreamSource});
  Rng sensor_rng = make_rng(seed, {kStreamSensor});
  Rng planner_rng = make_rng(seed, {kStreamPlanner});

  EpisodeState state;
  state.true_theta = sample_source(sc, source_rng);
  state.pose = sample_start(sc, source_rng);

  auto finish = [&](Termination t) {
    res.termination = t;
    res.steps_used = state.step;
    res.distance = state.distance_traveled;
    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
  };

  try {
    BeliefFilter filter(cfg.method, cfg.filter,
                        PriorBox::with_default_marginals(sc.prior_box), sc.domain,
                        cfg.n_particles, make_rng(seed, {kStreamFilter}));
    const auto hyp = filter.hypothetical_update();
    for (;;) {
      const Observation obs = observe(state, cfg.filter.noise, sensor_rng);
      filter.update(obs.z, obs.pose);
      if (observer) observer(state.step, filter, state);

      const BeliefSummary belief = summarize(filter.particles(), cfg.lookahead.ridge);
      const Pose est = belief.position();
      res.final_lps = std::hypot(est.x - state.true_theta.x, est.y - state.true_theta.y);
      if (!std::isfinite(res.final_lps)) throw NumericalError("belief mean is not finite");

      if (agdc_should_stop(belief, cfg.lookahead, res.final_lps)) {
        res.success = res.final_lps <= sc.success_radius;
        return finish(Termination::kAgdc);
      }
      if (state.step >= sc.step_budget) return finish(Termination::kTimeout);

      const LookaheadContext ctx{filter.particles(), state.pose, sc.domain, cfg.filter.noise,
                                 hyp};
      const PlanResult plan = plan_action(cfg.planner, ctx, cfg.lookahead, planner_rng);
      if (!plan.any_available) throw ProtocolError("no action moves the agent");
      state = step_agent(state, plan.action, sc);
    }
  } catch (const std::exception& e) {
    spdlog::info("episode seed={} ended degenerate: {}", seed, e.what());
    res.success = false;
    return finish(Termination::kDegenerate);
  }
}

MeanStd mean_std(std::span<const double> xs) {
  MeanStd m;
  if (xs.empty()) return m;
  double sum = 0.0;
  for (double x : xs) sum += x;
  m.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return m;
}

MetricsSummary compute_metrics(std::span<const EpisodeResult> results) {
  if (results.empty()) throw ConfigError("compute_metrics needs at least one episode");
  MetricsSummary m;
  m.episodes = results.size();
  std::vector<double> success, lps, steps, ade, rev;
  std::size_t timeouts = 0, degenerate = 0;
  for (const auto& r : results) {
    success.push_back(r.success ? 1.0 : 0.0);
    lps.push_back(r.final_lps);
    steps.push_back(r.steps_used);
    if (r.success) {
      ++m.successes;
      ade.push_back(r.distance);
      rev.push_back(r.wall_seconds);
    }
    timeouts += r.termination == Termination::kTimeout;
    degenerate += r.termination == Termination::kDegenerate;
  }
  m.oce = mean_std(success);
  m.lps = mean_std(lps);
  m.steps = mean_std(steps);
  if (!ade.empty()) {
    m.ade = mean_std(ade);
    m.rev = mean_std(rev);
  }
  m.timeout_rate = static_cast<double>(timeouts) / static_cast<double>(m.episodes);
  m.degenerate_rate = static_cast<double>(degenerate) / static_cast<double>(m.episodes);
  return m;
}

BatchResult run_batch(const ExperimentConfig& cfg, const EpisodeObserver& observer) {
  log::init_from_env();
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.episodes);
  BatchResult out;
  out.episodes.resize(n);

  std::size_t workers = cfg.parallel > 0 ? static_cast<std::size_t>(cfg.parallel)
                                         : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;)
      out.episodes[i] = run_episode(cfg, cfg.base_seed + i, observer);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  out.summary = compute_metrics(out.episodes);
  spdlog::info("batch {} {} {}/{}: oce={:.3f} lps={:.3f}", to_string(cfg.method),
               to_string(cfg.scenario), out.summary.successes, n, out.summary.oce.mean,
               out.summary.lps.mean);
  return out;
}

std::string format_float(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void write_episodes_csv(std::ostream& os, std::span<const EpisodeResult> results,
                        bool include_wall) {
  os << "seed,success,steps,distance," << (include_wall ? "wall_seconds," : "")
     << "lps,termination\n";
  for (const auto& r : results) {
    os << r.seed << ',' << (r.success ? 1 : 0) << ',' << r.steps_used << ','
       << format_float(r.distance) << ',';
    if (include_wall) os << format_float(r.wall_seconds) << ',';
    os << format_float(r.final_lps) << ',' << to_string(r.termination) << '\n';
  }
}

namespace {

// Rounds through the 6-significant-digit text form so JSON matches the CSVs.
Json num(double v) { return Json::parse(format_float(v)); }

Json mean_std_json(const MeanStd& m) { return {{"mean", num(m.mean)}, {"std", num(m.std)}}; }

Json opt_mean_std_json(const std::optional<MeanStd>& m) {
  return m ? mean_std_json(*m) : Json("timeout");
}

}  // namespace

std::string summary_to_json(const MetricsSummary& m, const ExperimentConfig& cfg,
                            int indent) {
  Json j;
  j["method"] = to_string(cfg.method);
  j["planner"] = to_string(cfg.planner);
  j["scenario"] = to_string(cfg.scenario);
  j["scale"] = to_string(cfg.scale);
  j["episodes"] = m.episodes;
  j["successes"] = m.successes;
  j["oce"] = mean_std_json(m.oce);
  j["ade"] = opt_mean_std_json(m.ade);
  j["rev"] = opt_mean_std_json(m.rev);
  j["lps"] = mean_std_json(m.lps);
  j["steps"] = mean_std_json(m.steps);
  j["timeout_rate"] = num(m.timeout_rate);
  j["degenerate_rate"] = num(m.degenerate_rate);
  return j.dump(indent);
}

void write_table1_header(std::ostream& os) {
  os << "scale,scenario,method,oce,oce_std,ade,ade_std,rev,rev_std,lps,lps_std,timeout_rate\n";
}

void write_table1_row(std::ostream& os, const GridCell& c) {
  const auto& m = c.summary;
  auto opt = [](const std::optional<MeanStd>& v, bool mean) {
    return v ? format_float(mean ? v->mean : v->std) : std::string("timeout");
  };
  os << to_string(c.scale) << ',' << to_string(c.scenario) << ',' << to_string(c.method) << ','
     << format_float(m.oce.mean) << ',' << format_float(m.oce.std) << ',' << opt(m.ade, true)
     << ',' << opt(m.ade, false) << ',' << opt(m.rev, true) << ',' << opt(m.rev, false) << ','
     << format_float(m.lps.mean) << ',' << format_float(m.lps.std) << ','
     << format_float(m.timeout_rate) << '\n';
}

}  // namespace depf
