// Command-line front end. Talks to the simulator only through the C API.
//
//   tap3 run   --config <file> [--seed N] [--out <csv>] [--trace <file>]
//   tap3 sweep --config <file> --pause 0:300:50 --protocols tap3,smprf,mprf
//              --seeds 1..5 --out <csv> [--plots <dir>]
//   tap3 audit --trace <file>
//
// Exit status: 0 success, 1 validation error, 2 run failure.

#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "tap3/tap3.h"

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRunFailure = 2;

int report(tap3_status status, int code) {
  std::fprintf(stderr, "tap3: %s\n", tap3_last_error());
  (void)status;
  return code;
}

int input_code(tap3_status s) {
  return (s == TAP3_ERR_ARGUMENT || s == TAP3_ERR_VALIDATION || s == TAP3_ERR_IO) ? kValidation
                                                                                   : kRunFailure;
}

int cmd_run(const std::string& config, std::optional<std::uint64_t> seed, const std::string& out,
            const std::string& trace) {
  tap3_scenario* scenario = nullptr;
  if (auto s = tap3_scenario_load(config.c_str(), &scenario); s != TAP3_OK) {
    return report(s, input_code(s));
  }
  if (seed) tap3_scenario_set_seed(scenario, *seed);
  tap3_result* result = nullptr;
  auto s = tap3_run(scenario, trace.empty() ? 0 : 1, &result);
  tap3_scenario_free(scenario);
  if (s != TAP3_OK) return report(s, s == TAP3_ERR_VALIDATION ? kValidation : kRunFailure);

  int code = kOk;
  if (out.empty()) {
    std::fputs(tap3_result_csv(result), stdout);
  } else if (auto w = tap3_result_write_csv(result, out.c_str()); w != TAP3_OK) {
    code = report(w, kRunFailure);
  }
  if (code == kOk && !trace.empty()) {
    if (auto w = tap3_result_write_trace(result, trace.c_str()); w != TAP3_OK) {
      code = report(w, kRunFailure);
    }
  }
  tap3_result_free(result);
  return code;
}

int cmd_sweep(const std::string& config, const std::string& pause, const std::string& protocols,
              const std::string& seeds, const std::string& out, const std::string& plots) {
  tap3_scenario* scenario = nullptr;
  if (auto s = tap3_scenario_load(config.c_str(), &scenario); s != TAP3_OK) {
    return report(s, input_code(s));
  }
  auto s = tap3_sweep(scenario, pause.c_str(), protocols.c_str(), seeds.c_str(), out.c_str(),
                      plots.empty() ? nullptr : plots.c_str());
  tap3_scenario_free(scenario);
  if (s == TAP3_OK) return kOk;
  return report(s, s == TAP3_ERR_VALIDATION || s == TAP3_ERR_ARGUMENT ? kValidation : kRunFailure);
}

void print_row(const char* row, void*) { std::printf("%s\n", row); }

int cmd_audit(const std::string& trace) {
  tap3_audit_summary summary{};
  std::printf("flow_id,verdict,active_pos,passive_positions\n");
  auto s = tap3_audit_trace(trace.c_str(), print_row, nullptr, &summary);
  if (s == TAP3_OK) {
    std::fprintf(stderr, "tap3: %llu audits replayed, all match the recording\n",
                 static_cast<unsigned long long>(summary.audits));
    return kOk;
  }
  return report(s, input_code(s));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TAP3 MANET simulator"};
  app.require_subcommand(1);

  std::string config, out, trace, pause, protocols = "tap3,smprf,mprf", seeds = "1..5", plots;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "run one scenario");
  run->add_option("--config", config, "scenario file")->required();
  run->add_option("--seed", seed, "override rng_seed");
  run->add_option("--out", out, "metrics CSV (stdout when omitted)");
  run->add_option("--trace", trace, "packet trace CSV; evidence files are written beside it");

  auto* sweep = app.add_subcommand("sweep", "pause-time sweep over protocols and seeds");
  sweep->add_option("--config", config, "base scenario file")->required();
  sweep->add_option("--pause", pause, "start:stop:step or comma list")->required();
  sweep->add_option("--protocols", protocols, "comma list of tap3, smprf, mprf");
  sweep->add_option("--seeds", seeds, "a..b or comma list");
  sweep->add_option("--out", out, "CSV output")->required();
  sweep->add_option("--plots", plots, "directory for SVG charts");

  auto* audit = app.add_subcommand("audit", "replay recorded route audits");
  audit->add_option("--trace", trace, "trace file or its .audit evidence")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }

  if (*run) return cmd_run(config, seed, out, trace);
  if (*sweep) return cmd_sweep(config, pause, protocols, seeds, out, plots);
  return cmd_audit(trace);
}
