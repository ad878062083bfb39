#include "depf/depf_c.h"

#include "depf/harness.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <new>
#include <sstream>
#include <string>

struct depf_config {
  depf::ExperimentConfig cfg;
};

struct depf_batch {
  depf::ExperimentConfig cfg;
  depf::BatchResult result;
};

namespace {

thread_local std::string g_last_error;

depf_status fail(depf_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class F>
depf_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return DEPF_OK;
  } catch (const depf::ConfigError& e) {
    return fail(DEPF_ERR_CONFIG, e.what());
  } catch (const depf::NumericalError& e) {
    return fail(DEPF_ERR_NUMERICAL, e.what());
  } catch (const depf::ProtocolError& e) {
    return fail(DEPF_ERR_PROTOCOL, e.what());
  } catch (const std::bad_alloc&) {
    return fail(DEPF_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(DEPF_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(DEPF_ERR_INTERNAL, "unknown error");
  }
}

#define DEPF_REQUIRE(ptr)                                                  \
  do {                                                                     \
    if (!(ptr)) return fail(DEPF_ERR_CONFIG, "null argument: " #ptr);     \
  } while (0)

char* dup_string(const std::string& s) {
  auto* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

depf_episode_result to_c(const depf::EpisodeResult& r) {
  depf_episode_result c{};
  c.seed = r.seed;
  c.success = r.success ? 1 : 0;
  c.steps_used = r.steps_used;
  c.distance = r.distance;
  c.wall_seconds = r.wall_seconds;
  c.final_lps = r.final_lps;
  c.termination = static_cast<depf_termination>(static_cast<int>(r.termination));
  return c;
}

}  // namespace

extern "C" {

const char* depf_last_error(void) { return g_last_error.c_str(); }

const char* depf_version(void) { return "0.1.0"; }

void depf_string_free(char* s) { delete[] s; }

depf_status depf_config_new(depf_config** out) {
  DEPF_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new depf_config{}; });
}

depf_status depf_config_from_json(const char* json, depf_config** out) {
  DEPF_REQUIRE(json);
  DEPF_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new depf_config{depf::config_from_json(json)}; });
}

depf_status depf_config_load(const char* path, depf_config** out) {
  DEPF_REQUIRE(path);
  DEPF_REQUIRE(out);
  *out = nullptr;
  if (!std::ifstream(path)) return fail(DEPF_ERR_IO, std::string("cannot open ") + path);
  return guarded([&] { *out = new depf_config{depf::load_config(path)}; });
}

depf_status depf_config_clone(const depf_config* cfg, depf_config** out) {
  DEPF_REQUIRE(cfg);
  DEPF_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new depf_config{cfg->cfg}; });
}

void depf_config_free(depf_config* cfg) { delete cfg; }

depf_status depf_config_set(depf_config* cfg, const char* assignment) {
  DEPF_REQUIRE(cfg);
  DEPF_REQUIRE(assignment);
  return guarded([&] {
    depf::ExperimentConfig copy = cfg->cfg;
    depf::apply_override(copy, assignment);
    cfg->cfg = copy;
  });
}

depf_status depf_config_get(const depf_config* cfg, const char* key, char** out) {
  DEPF_REQUIRE(cfg);
  DEPF_REQUIRE(key);
  DEPF_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    const auto j = nlohmann::ordered_json::parse(depf::config_to_json(cfg->cfg, -1));
    std::string ptr = "/" + std::string(key);
    for (auto& ch : ptr)
      if (ch == '.') ch = '/';
    const nlohmann::ordered_json::json_pointer p(ptr);
    if (!j.contains(p)) throw depf::ConfigError("unknown config key: " + std::string(key));
    *out = dup_string(j.at(p).dump());
  });
}

depf_status depf_config_to_json(const depf_config* cfg, char** out) {
  DEPF_REQUIRE(cfg);
  DEPF_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = dup_string(depf::config_to_json(cfg->cfg)); });
}

depf_status depf_config_validate(const depf_config* cfg) {
  DEPF_REQUIRE(cfg);
  return guarded([&] { cfg->cfg.validate(); });
}

depf_status depf_run_episode(const depf_config* cfg, uint64_t seed, depf_episode_result* out) {
  DEPF_REQUIRE(cfg);
  DEPF_REQUIRE(out);
  return guarded([&] {
    cfg->cfg.validate();
    *out = to_c(depf::run_episode(cfg->cfg, seed));
  });
}

depf_status depf_run_batch(const depf_config* cfg, depf_batch** out) {
  DEPF_REQUIRE(cfg);
  DEPF_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new depf_batch{cfg->cfg, depf::run_batch(cfg->cfg)}; });
}

void depf_batch_free(depf_batch* batch) { delete batch; }

size_t depf_batch_size(const depf_batch* batch) {
  return batch ? batch->result.episodes.size() : 0;
}

depf_status depf_batch_episode(const depf_batch* batch, size_t index,
                               depf_episode_result* out) {
  DEPF_REQUIRE(batch);
  DEPF_REQUIRE(out);
  if (index >= batch->result.episodes.size())
    return fail(DEPF_ERR_CONFIG, "episode index out of range");
  *out = to_c(batch->result.episodes[index]);
  return DEPF_OK;
}

depf_status depf_batch_metrics(const depf_batch* batch, depf_metrics* out) {
  DEPF_REQUIRE(batch);
  DEPF_REQUIRE(out);
  const auto& m = batch->result.summary;
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  depf_metrics c{};
  c.episodes = m.episodes;
  c.successes = m.successes;
  c.oce = m.oce.mean;
  c.oce_std = m.oce.std;
  c.ade_timeout = m.ade ? 0 : 1;
  c.ade = m.ade ? m.ade->mean : nan;
  c.ade_std = m.ade ? m.ade->std : nan;
  c.rev = m.rev ? m.rev->mean : nan;
  c.rev_std = m.rev ? m.rev->std : nan;
  c.lps = m.lps.mean;
  c.lps_std = m.lps.std;
  c.steps = m.steps.mean;
  c.steps_std = m.steps.std;
  c.timeout_rate = m.timeout_rate;
  c.degenerate_rate = m.degenerate_rate;
  *out = c;
  return DEPF_OK;
}

depf_status depf_batch_summary_json(const depf_batch* batch, char** out) {
  DEPF_REQUIRE(batch);
  DEPF_REQUIRE(out);
  *out = nullptr;
  return guarded(
      [&] { *out = dup_string(depf::summary_to_json(batch->result.summary, batch->cfg)); });
}

depf_status depf_batch_episodes_csv(const depf_batch* batch, int include_wall, char** out) {
  DEPF_REQUIRE(batch);
  DEPF_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    std::ostringstream os;
    depf::write_episodes_csv(os, batch->result.episodes, include_wall != 0);
    *out = dup_string(os.str());
  });
}

depf_status depf_batch_table1_row(const depf_batch* batch, char** out) {
  DEPF_REQUIRE(batch);
  DEPF_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    std::ostringstream os;
    depf::write_table1_row(os, {batch->cfg.scenario, batch->cfg.scale, batch->cfg.method,
                                batch->result.summary});
    *out = dup_string(os.str());
  });
}

depf_status depf_table1_header(char** out) {
  DEPF_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    std::ostringstream os;
    depf::write_table1_header(os);
    *out = dup_string(os.str());
  });
}

depf_status depf_spsi_check(const depf_config* cfg, depf_spsi_report* out) {
  DEPF_REQUIRE(cfg);
  DEPF_REQUIRE(out);
  return guarded([&] {
    depf::ExperimentConfig c = cfg->cfg;
    c.method = depf::Method::kBootstrap;
    const depf::Box2 prior = c.scenario_instance().prior_box;
    std::atomic<std::size_t> steps{0}, violations{0};
    const auto batch = depf::run_batch(
        c, [&](int, const depf::BeliefFilter& f, const depf::EpisodeState&) {
          ++steps;
          for (const auto& p : f.particles().particles) {
            if (!prior.contains(p.x, p.y)) {
              ++violations;
              break;
            }
          }
        });
    out->episodes = batch.summary.episodes;
    out->successes = batch.summary.successes;
    out->steps_checked = steps;
    out->violations = violations;
  });
}

}  // extern "C"
