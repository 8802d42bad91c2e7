#include "tap3/tap3.h"

#include <exception>
#include <fstream>
#include <string>

#include "tap3/audit_log.hpp"
#include "tap3/config.hpp"
#include "tap3/simulator.hpp"
#include "tap3/sweep.hpp"

struct tap3_scenario {
  tap3::ScenarioConfig config;
};

struct tap3_result {
  tap3::RunResult run;
  std::string csv;
};

namespace {

thread_local std::string g_last_error;

tap3_status fail(tap3_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Maps exceptions escaping the core onto status codes.
template <typename F>
tap3_status guarded(F&& body) {
  try {
    return body();
  } catch (const tap3::ValidationError& e) {
    return fail(TAP3_ERR_VALIDATION, e.what());
  } catch (const tap3::ConfigError& e) {
    return fail(TAP3_ERR_VALIDATION, e.what());
  } catch (const tap3::ArtifactError& e) {
    return fail(TAP3_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(TAP3_ERR_RUN, e.what());
  } catch (...) {
    return fail(TAP3_ERR_RUN, "unknown failure");
  }
}

}  // namespace

extern "C" {

const char* tap3_version(void) { return "1.0.0"; }

const char* tap3_last_error(void) { return g_last_error.c_str(); }

tap3_status tap3_scenario_load(const char* path, tap3_scenario** out) {
  if (!path || !out) return fail(TAP3_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    std::ifstream f(path);
    if (!f) return fail(TAP3_ERR_IO, std::string("cannot read config file '") + path + "'");
    *out = new tap3_scenario{tap3::load_config(path)};
    return TAP3_OK;
  });
}

tap3_status tap3_scenario_parse(const char* text, tap3_scenario** out) {
  if (!text || !out) return fail(TAP3_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new tap3_scenario{tap3::parse_config(text)};
    return TAP3_OK;
  });
}

tap3_status tap3_scenario_set_seed(tap3_scenario* s, uint64_t seed) {
  if (!s) return fail(TAP3_ERR_ARGUMENT, "null scenario");
  s->config.rng_seed = seed;
  return TAP3_OK;
}

tap3_status tap3_scenario_set_pause(tap3_scenario* s, double pause) {
  if (!s) return fail(TAP3_ERR_ARGUMENT, "null scenario");
  return guarded([&] {
    tap3::ScenarioConfig c = s->config;
    c.pause_time = pause;
    tap3::validate(c);
    s->config = c;
    return TAP3_OK;
  });
}

tap3_status tap3_scenario_set_protocol(tap3_scenario* s, const char* name) {
  if (!s || !name) return fail(TAP3_ERR_ARGUMENT, "null argument");
  auto p = tap3::parse_protocol(name);
  if (!p) return fail(TAP3_ERR_VALIDATION, std::string("unknown protocol '") + name + "'");
  s->config.protocol = *p;
  return TAP3_OK;
}

void tap3_scenario_free(tap3_scenario* s) { delete s; }

tap3_status tap3_run(const tap3_scenario* s, int record_trace, tap3_result** out) {
  if (!s || !out) return fail(TAP3_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    tap3::RunOptions opt;
    opt.record_trace = record_trace != 0;
    auto* r = new tap3_result{tap3::run_scenario(s->config, opt), {}};
    r->csv = tap3::metrics_csv_header() + "\n" + tap3::metrics_csv_row(r->run.metrics) + "\n";
    *out = r;
    return TAP3_OK;
  });
}

tap3_status tap3_result_metrics(const tap3_result* r, tap3_metrics* out) {
  if (!r || !out) return fail(TAP3_ERR_ARGUMENT, "null argument");
  const auto& m = r->run.metrics;
  *out = tap3_metrics{};
  out->protocol = tap3::to_string(m.protocol);
  out->pause_time_s = m.pause_time;
  out->seed = r->run.config.rng_seed;
  out->has_pdr = m.pdr.has_value();
  out->pdr_percent = m.pdr.value_or(0);
  out->has_delay = m.avg_delay.has_value();
  out->avg_delay_s = m.avg_delay.value_or(0);
  out->overhead_ratio = m.overhead;
  out->detected_active = m.detected_active;
  out->detected_passive = m.detected_passive;
  out->false_positives = m.false_positives;
  for (const auto& f : r->run.flows) {
    out->data_sent += f.sent;
    out->data_delivered += f.delivered;
  }
  out->control_tx = r->run.control_tx;
  out->privacy_leaks = r->run.privacy_leaks;
  return TAP3_OK;
}

const char* tap3_result_csv(const tap3_result* r) { return r ? r->csv.c_str() : ""; }

tap3_status tap3_result_write_csv(const tap3_result* r, const char* path) {
  if (!r || !path) return fail(TAP3_ERR_ARGUMENT, "null argument");
  std::ofstream f(path, std::ios::binary);
  if (!f) return fail(TAP3_ERR_IO, std::string("cannot write '") + path + "'");
  f << r->csv;
  return f ? TAP3_OK : fail(TAP3_ERR_IO, std::string("write failed for '") + path + "'");
}

tap3_status tap3_result_write_trace(const tap3_result* r, const char* path) {
  if (!r || !path) return fail(TAP3_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    tap3::write_trace_files(r->run, path);
    return TAP3_OK;
  });
}

void tap3_result_free(tap3_result* r) { delete r; }

tap3_status tap3_sweep(const tap3_scenario* base, const char* pauses, const char* protocols,
                       const char* seeds, const char* csv_path, const char* plots_dir) {
  if (!base || !pauses || !protocols || !seeds || !csv_path) {
    return fail(TAP3_ERR_ARGUMENT, "null argument");
  }
  return guarded([&] {
    tap3::SweepSpec spec;
    spec.base = base->config;
    spec.pause_times = tap3::parse_pause_list(pauses);
    spec.protocols = tap3::parse_protocol_list(protocols);
    spec.seeds = tap3::parse_seed_list(seeds);
    const auto result = tap3::run_sweep(spec);
    std::ofstream f(csv_path, std::ios::binary);
    if (!f) return fail(TAP3_ERR_IO, std::string("cannot write '") + csv_path + "'");
    f << tap3::sweep_csv(result);
    if (!f) return fail(TAP3_ERR_IO, std::string("write failed for '") + csv_path + "'");
    if (plots_dir) tap3::write_plots(result, plots_dir);
    return TAP3_OK;
  });
}

tap3_status tap3_audit_trace(const char* trace_path, tap3_row_callback on_row, void* user,
                             tap3_audit_summary* out) {
  if (!trace_path) return fail(TAP3_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    const auto summary = tap3::replay_audits(trace_path);
    if (on_row) {
      for (const auto& row : summary.rows) on_row(row.c_str(), user);
    }
    if (out) *out = tap3_audit_summary{summary.audits, summary.mismatches};
    if (summary.mismatches) {
      return fail(TAP3_ERR_AUDIT, std::to_string(summary.mismatches) +
                                      " replayed audits disagree with the recording");
    }
    return TAP3_OK;
  });
}

}  // extern "C"
