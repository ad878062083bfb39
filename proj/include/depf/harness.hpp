#pragma once

#include "depf/belief_filter.hpp"
#include "depf/environment.hpp"
#include "depf/planners.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace depf {

struct ExperimentConfig {
  Method method = Method::kDepf;
  Planner planner = Planner::kInfoGain;
  ScenarioName scenario = ScenarioName::kSevere;
  Scale scale = Scale::kSmall;
  std::size_t n_particles = 1000;
  int episodes = 200;
  std::uint64_t base_seed = 0;
  int parallel = 0;  // worker threads; 0 = hardware concurrency
  std::optional<double> success_radius;  // scenario default when unset
  std::optional<int> step_budget;
  FilterSettings filter;
  LookaheadConfig lookahead;

  void validate() const;
  Scenario scenario_instance() const;
};

/// JSON round trip with snake_case keys mirroring the struct fields. Unknown
/// keys are rejected.
std::string config_to_json(const ExperimentConfig& cfg, int indent = 2);
ExperimentConfig config_from_json(std::string_view text);
ExperimentConfig load_config(const std::string& path);

/// Applies one `key=value` override; nested keys use dots
/// (e.g. depf.delta_margin=0.5). Values are parsed as JSON, falling back to
/// a plain string.
void apply_override(ExperimentConfig& cfg, std::string_view assignment);

enum class Termination { kAgdc, kTimeout, kDegenerate };
std::string_view to_string(Termination t);

struct EpisodeResult {
  std::uint64_t seed = 0;
  bool success = false;
  int steps_used = 0;
  double distance = 0.0;
  double wall_seconds = 0.0;
  double final_lps = 0.0;
  Termination termination = Termination::kTimeout;
};

/// Called after every belief update with the step index, the filter and the
/// hidden state. Used by property checks; must be thread-safe under
/// parallel batches.
using EpisodeObserver =
    std::function<void(int step, const BeliefFilter& filter, const EpisodeState& state)>;

/// observe -> belief update -> AGDC stop test -> plan -> act, until AGDC or
/// budget. Deterministic for a given (cfg, seed) apart from wall_seconds.
EpisodeResult run_episode(const ExperimentConfig& cfg, std::uint64_t seed,
                          const EpisodeObserver& observer = {});

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
};

MeanStd mean_std(std::span<const double> xs);

struct MetricsSummary {
  std::size_t episodes = 0;
  std::size_t successes = 0;
  MeanStd oce;
  std::optional<MeanStd> ade;  // over successes; nullopt is the "timeout" sentinel
  std::optional<MeanStd> rev;
  MeanStd lps;
  MeanStd steps;               // all episodes
  double timeout_rate = 0.0;
  double degenerate_rate = 0.0;
};

MetricsSummary compute_metrics(std::span<const EpisodeResult> results);

struct BatchResult {
  std::vector<EpisodeResult> episodes;  // in seed order
  MetricsSummary summary;
};

/// Runs seeds base_seed + i for i < episodes on cfg.parallel threads.
BatchResult run_batch(const ExperimentConfig& cfg, const EpisodeObserver& observer = {});

/// "%.6g"
std::string format_float(double v);

void write_episodes_csv(std::ostream& os, std::span<const EpisodeResult> results,
                        bool include_wall = true);
std::string summary_to_json(const MetricsSummary& m, const ExperimentConfig& cfg,
                            int indent = 2);

struct GridCell {
  ScenarioName scenario;
  Scale scale;
  Method method;
  MetricsSummary summary;
};

void write_table1_header(std::ostream& os);
void write_table1_row(std::ostream& os, const GridCell& cell);

}  // namespace depf
