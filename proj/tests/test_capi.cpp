// Exercises the shared library through its C header only.

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "tap3/tap3.h"

namespace {

const char* kScenario =
    "sim_duration = 40\n"
    "attacker = 27:BlackHole:1000\n"
    "attacker = 28:SeqInflation:500\n"
    "attacker = 29:PassiveDrop:0.8\n";

void collect(const char* row, void* user) { static_cast<std::vector<std::string>*>(user)->push_back(row); }

}  // namespace

TEST_CASE("scenario handles and validation errors") {
  CHECK(std::strlen(tap3_version()) > 0);
  tap3_scenario* s = nullptr;
  CHECK(tap3_scenario_parse("flows = 0\nnode_count = x\n", &s) == TAP3_ERR_VALIDATION);
  CHECK(s == nullptr);
  CHECK(std::string(tap3_last_error()).find("node_count") != std::string::npos);
  CHECK(tap3_scenario_parse(nullptr, &s) == TAP3_ERR_ARGUMENT);
  CHECK(tap3_scenario_load("/nonexistent.cfg", &s) == TAP3_ERR_IO);

  REQUIRE(tap3_scenario_parse(kScenario, &s) == TAP3_OK);
  CHECK(tap3_scenario_set_pause(s, 1e6) == TAP3_ERR_VALIDATION);
  CHECK(tap3_scenario_set_pause(s, 10) == TAP3_OK);
  CHECK(tap3_scenario_set_protocol(s, "olsr") == TAP3_ERR_VALIDATION);
  CHECK(tap3_scenario_set_protocol(s, "smprf") == TAP3_OK);
  CHECK(tap3_scenario_set_seed(nullptr, 1) == TAP3_ERR_ARGUMENT);
  tap3_scenario_free(s);
  tap3_scenario_free(nullptr);
}

TEST_CASE("run, metrics and CSV through the C interface") {
  tap3_scenario* s = nullptr;
  REQUIRE(tap3_scenario_parse(kScenario, &s) == TAP3_OK);
  tap3_scenario_set_seed(s, 3);
  tap3_result* r = nullptr;
  REQUIRE(tap3_run(s, 0, &r) == TAP3_OK);
  tap3_metrics m{};
  REQUIRE(tap3_result_metrics(r, &m) == TAP3_OK);
  CHECK(std::string(m.protocol) == "tap3");
  CHECK(m.seed == 3);
  CHECK(m.has_pdr);
  CHECK(m.pdr_percent == doctest::Approx(100.0 * m.data_delivered / m.data_sent));
  CHECK(m.overhead_ratio == doctest::Approx(static_cast<double>(m.control_tx) / m.data_delivered));
  CHECK(m.privacy_leaks == 0);
  const std::string csv = tap3_result_csv(r);
  CHECK(csv.rfind("protocol,pause_time_s,seed,", 0) == 0);
  CHECK(csv.find("\ntap3,0.000000000000,3,") != std::string::npos);

  tap3_result* again = nullptr;
  REQUIRE(tap3_run(s, 0, &again) == TAP3_OK);
  CHECK(csv == tap3_result_csv(again));
  tap3_result_free(again);

  CHECK(tap3_result_write_csv(r, "/nonexistent/dir/out.csv") == TAP3_ERR_IO);
  CHECK(tap3_result_metrics(nullptr, &m) == TAP3_ERR_ARGUMENT);
  tap3_result_free(r);
  tap3_scenario_free(s);
}

TEST_CASE("trace, replay and sweep through the C interface") {
  const auto dir = std::filesystem::temp_directory_path() / "tap3_capi_test";
  std::filesystem::create_directories(dir);
  const std::string trace = (dir / "trace.csv").string();

  tap3_scenario* s = nullptr;
  REQUIRE(tap3_scenario_parse(kScenario, &s) == TAP3_OK);
  tap3_scenario_set_seed(s, 1);
  tap3_result* r = nullptr;
  REQUIRE(tap3_run(s, 1, &r) == TAP3_OK);
  REQUIRE(tap3_result_write_trace(r, trace.c_str()) == TAP3_OK);
  tap3_result_free(r);

  std::vector<std::string> rows;
  tap3_audit_summary summary{};
  CHECK(tap3_audit_trace(trace.c_str(), collect, &rows, &summary) == TAP3_OK);
  CHECK(summary.mismatches == 0);
  CHECK(rows.size() == summary.audits);
  CHECK(tap3_audit_trace((dir / "none.csv").string().c_str(), nullptr, nullptr, nullptr) != TAP3_OK);

  const std::string csv = (dir / "sweep.csv").string();
  const std::string plots = (dir / "plots").string();
  REQUIRE(tap3_sweep(s, "0:20:20", "tap3,mprf", "1..2", csv.c_str(), plots.c_str()) == TAP3_OK);
  std::ifstream in(csv);
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == 1 + 2 * 2 * 3);
  CHECK(std::filesystem::exists(dir / "plots" / "pdr.svg"));
  CHECK(std::filesystem::exists(dir / "plots" / "delay.svg"));
  CHECK(std::filesystem::exists(dir / "plots" / "overhead.svg"));
  CHECK(tap3_sweep(s, "0:20:0", "tap3", "1", csv.c_str(), nullptr) == TAP3_ERR_VALIDATION);
  tap3_scenario_free(s);
  std::filesystem::remove_all(dir);
}
