// Command-line front end. Talks to the library only through depf_c.h.
#include "depf/depf_c.h"

#include <CLI11.hpp>

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct CliError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(depf_status s, const std::string& what) {
  if (s != DEPF_OK) throw CliError(what + ": " + depf_last_error());
}

using ConfigPtr = std::unique_ptr<depf_config, decltype(&depf_config_free)>;
using BatchPtr = std::unique_ptr<depf_batch, decltype(&depf_batch_free)>;

std::string take(char* s) {
  std::string out(s ? s : "");
  depf_string_free(s);
  return out;
}

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::optional<int> parallel;
  std::optional<std::string> method, planner, scenario, scale;
  std::string out = "results";
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config_path, "JSON experiment config")->check(CLI::ExistingFile);
  app->add_option("--set", o.sets, "override, key=value (repeatable)");
  app->add_option("--seed", o.seed, "base seed");
  app->add_option("--episodes", o.episodes, "episodes per cell");
  app->add_option("--out", o.out, "output directory");
  app->add_option("--parallel", o.parallel, "worker threads (0 = all cores)");
  app->add_option("--method", o.method, "bootstrap|depf|jitter|roughen|rejuvenate");
  app->add_option("--planner", o.planner, "info_gain|infotaxis|entrotaxis|dcee");
  app->add_option("--scenario", o.scenario, "no_error|moderate|severe");
  app->add_option("--scale", o.scale, "small|large");
}

void set(depf_config* cfg, const std::string& assignment) {
  check(depf_config_set(cfg, assignment.c_str()), "--set " + assignment);
}

void set_str(depf_config* cfg, const std::string& key, const std::string& value) {
  set(cfg, key + "=\"" + value + "\"");
}

ConfigPtr build_config(const CommonOptions& o) {
  depf_config* raw = nullptr;
  if (o.config_path.empty())
    check(depf_config_new(&raw), "config");
  else
    check(depf_config_load(o.config_path.c_str(), &raw), "--config");
  ConfigPtr cfg(raw, depf_config_free);
  if (o.method) set_str(cfg.get(), "method", *o.method);
  if (o.planner) set_str(cfg.get(), "planner", *o.planner);
  if (o.scenario) set_str(cfg.get(), "scenario", *o.scenario);
  if (o.scale) set_str(cfg.get(), "scale", *o.scale);
  if (o.seed) set(cfg.get(), "base_seed=" + std::to_string(*o.seed));
  if (o.episodes) set(cfg.get(), "episodes=" + std::to_string(*o.episodes));
  if (o.parallel) set(cfg.get(), "parallel=" + std::to_string(*o.parallel));
  for (const auto& s : o.sets) set(cfg.get(), s);
  check(depf_config_validate(cfg.get()), "config");
  return cfg;
}

ConfigPtr clone(const depf_config* cfg) {
  depf_config* raw = nullptr;
  check(depf_config_clone(cfg, &raw), "config");
  return ConfigPtr(raw, depf_config_free);
}

std::string get(const depf_config* cfg, const char* key) {
  char* s = nullptr;
  check(depf_config_get(cfg, key, &s), key);
  std::string v = take(s);
  if (v.size() >= 2 && v.front() == '"') v = v.substr(1, v.size() - 2);
  return v;
}

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw CliError("cannot write " + p.string());
  f << text;
}

BatchPtr run(const depf_config* cfg) {
  depf_batch* raw = nullptr;
  check(depf_run_batch(cfg, &raw), "run");
  return BatchPtr(raw, depf_batch_free);
}

void save_batch(const depf_batch* b, const depf_config* cfg, const fs::path& dir) {
  char* s = nullptr;
  check(depf_batch_episodes_csv(b, 1, &s), "episodes.csv");
  write_file(dir / "episodes.csv", take(s));
  check(depf_batch_summary_json(b, &s), "summary.json");
  write_file(dir / "summary.json", take(s) + "\n");
  check(depf_config_to_json(cfg, &s), "config.json");
  write_file(dir / "config.json", take(s) + "\n");
}

void print_metrics(const std::string& label, const depf_batch* b) {
  depf_metrics m{};
  check(depf_batch_metrics(b, &m), "metrics");
  std::printf("%-40s OCE %.3f+-%.3f  ", label.c_str(), m.oce, m.oce_std);
  if (m.ade_timeout)
    std::printf("ADE timeout  ");
  else
    std::printf("ADE %.2f+-%.2f  ", m.ade, m.ade_std);
  std::printf("LPS %.3f+-%.3f  steps %.1f  timeout %.2f\n", m.lps, m.lps_std, m.steps,
              m.timeout_rate);
  std::fflush(stdout);
}

int cmd_run(const CommonOptions& o) {
  auto cfg = build_config(o);
  auto b = run(cfg.get());
  save_batch(b.get(), cfg.get(), o.out);
  print_metrics(get(cfg.get(), "method") + "/" + get(cfg.get(), "scenario") + "/" +
                    get(cfg.get(), "scale"),
                b.get());
  return 0;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

int cmd_bench(const CommonOptions& o, const std::string& scales, const std::string& methods) {
  auto base = build_config(o);
  char* s = nullptr;
  check(depf_table1_header(&s), "table1");
  std::string table = take(s);
  for (const auto& scale : split_csv(scales)) {
    for (const std::string scenario : {"no_error", "moderate", "severe"}) {
      for (const auto& method : split_csv(methods)) {
        auto cfg = clone(base.get());
        set_str(cfg.get(), "scale", scale);
        set_str(cfg.get(), "scenario", scenario);
        set_str(cfg.get(), "method", method);
        auto b = run(cfg.get());
        const std::string cell = scale + "_" + scenario + "_" + method;
        save_batch(b.get(), cfg.get(), fs::path(o.out) / cell);
        check(depf_batch_table1_row(b.get(), &s), "table1");
        table += take(s);
        print_metrics(cell, b.get());
      }
    }
  }
  write_file(fs::path(o.out) / "table1.csv", table);
  return 0;
}

struct Sweep {
  std::string knob;
  std::vector<std::pair<std::string, std::vector<std::string>>> points;  // label, overrides
};

std::vector<Sweep> ablation_sweeps() {
  return {
      {"delta",
       {{"0.1", {"depf.delta_margin=0.1"}},
        {"0.3", {"depf.delta_margin=0.3"}},
        {"0.5", {"depf.delta_margin=0.5"}}}},
      {"beta",
       {{"0.1", {"depf.reg_mode=\"additive\"", "depf.beta_min=0.1", "depf.beta_max=0.1"}},
        {"0.35", {"depf.reg_mode=\"additive\"", "depf.beta_min=0.35", "depf.beta_max=0.35"}},
        {"0.6", {"depf.reg_mode=\"additive\"", "depf.beta_min=0.6", "depf.beta_max=0.6"}}}},
      {"A",
       {{"0.1", {"depf.bandwidth_A=0.1"}},
        {"0.5", {"depf.bandwidth_A=0.5"}},
        {"2.0", {"depf.bandwidth_A=2.0"}}}},
      {"lambda",
       {{"0.001", {"depf.ridge_lambda=0.001"}},
        {"0.01", {"depf.ridge_lambda=0.01"}},
        {"0.1", {"depf.ridge_lambda=0.1"}}}},
      {"exploratory_ratio",
       {{"0.01", {"depf.exploratory_ratio=0.01"}},
        {"0.05", {"depf.exploratory_ratio=0.05"}},
        {"0.2", {"depf.exploratory_ratio=0.2"}}}},
      // baseline hyperparameters, meaningful with --method jitter|roughen|rejuvenate
      {"jitter_sigma",
       {{"0.05", {"perturb.jitter_sigma=[0.05,0.05,10,0.05,0.05,0.05,0.05]"}},
        {"0.1", {"perturb.jitter_sigma=[0.1,0.1,10,0.05,0.05,0.05,0.05]"}},
        {"0.25", {"perturb.jitter_sigma=[0.25,0.25,10,0.05,0.05,0.05,0.05]"}}}},
      {"rough_K",
       {{"0.05", {"perturb.rough_K=0.05"}},
        {"0.1", {"perturb.rough_K=0.1"}},
        {"0.2", {"perturb.rough_K=0.2"}}}},
      {"rejuv_sigma_rm",
       {{"0.25", {"perturb.rejuv_sigma_rm=0.25"}},
        {"0.5", {"perturb.rejuv_sigma_rm=0.5"}},
        {"1.0", {"perturb.rejuv_sigma_rm=1.0"}}}},
  };
}

int cmd_ablate(const CommonOptions& o, const std::string& knobs) {
  auto base = build_config(o);
  auto wanted = split_csv(knobs);
  if (wanted.empty()) wanted = {"delta", "beta", "A", "lambda", "exploratory_ratio"};
  std::string csv = "knob,value,oce,oce_std,steps,steps_std,lps,lps_std,ade,timeout_rate\n";
  for (const auto& sweep : ablation_sweeps()) {
    if (std::find(wanted.begin(), wanted.end(), sweep.knob) == wanted.end()) continue;
    for (const auto& [label, overrides] : sweep.points) {
      auto cfg = clone(base.get());
      for (const auto& ov : overrides) set(cfg.get(), ov);
      auto b = run(cfg.get());
      save_batch(b.get(), cfg.get(), fs::path(o.out) / (sweep.knob + "_" + label));
      depf_metrics m{};
      check(depf_batch_metrics(b.get(), &m), "metrics");
      char line[512];
      std::snprintf(line, sizeof line, "%s,%s,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%s,%.6g\n",
                    sweep.knob.c_str(), label.c_str(), m.oce, m.oce_std, m.steps, m.steps_std,
                    m.lps, m.lps_std,
                    m.ade_timeout ? "timeout" : std::to_string(m.ade).c_str(), m.timeout_rate);
      csv += line;
      print_metrics(sweep.knob + "=" + label, b.get());
    }
  }
  write_file(fs::path(o.out) / "ablation.csv", csv);
  return 0;
}

int cmd_spsi(const CommonOptions& o) {
  CommonOptions forced = o;
  forced.method = "bootstrap";
  if (!forced.scenario) forced.scenario = "severe";
  auto cfg = build_config(forced);
  depf_spsi_report r{};
  check(depf_spsi_check(cfg.get(), &r), "spsi-check");
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "{\n  \"episodes\": %zu,\n  \"steps_checked\": %zu,\n  \"violations\": %zu,\n"
                "  \"successes\": %zu\n}\n",
                r.episodes, r.steps_checked, r.violations, r.successes);
  write_file(fs::path(o.out) / "spsi.json", buf);
  std::printf("spsi-check: %zu episodes, %zu belief updates, %zu violations, %zu successes\n",
              r.episodes, r.steps_checked, r.violations, r.successes);
  return r.violations == 0 && r.successes == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffusion-enhanced particle filter source-term estimation benchmark"};
  app.require_subcommand(1);

  CommonOptions run_o, bench_o, ablate_o, spsi_o;
  std::string scales = "small,large";
  std::string methods = "bootstrap,jitter,roughen,rejuvenate,depf";
  std::string knobs;

  auto* run_cmd = app.add_subcommand("run", "run one configuration");
  add_common(run_cmd, run_o);
  auto* bench_cmd = app.add_subcommand("bench", "method x scenario x scale grid (table1.csv)");
  add_common(bench_cmd, bench_o);
  bench_cmd->add_option("--scales", scales, "comma-separated scales");
  bench_cmd->add_option("--methods", methods, "comma-separated methods");
  auto* ablate_cmd = app.add_subcommand("ablate", "sweep delta, beta, A, lambda, exploratory ratio");
  add_common(ablate_cmd, ablate_o);
  ablate_cmd->add_option("--knobs", knobs, "comma-separated subset of knobs");
  auto* spsi_cmd = app.add_subcommand("spsi-check", "bootstrap support lock-in property");
  add_common(spsi_cmd, spsi_o);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run_o);
    if (*bench_cmd) return cmd_bench(bench_o, scales, methods);
    if (*ablate_cmd) return cmd_ablate(ablate_o, knobs);
    if (*spsi_cmd) return cmd_spsi(spsi_o);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
