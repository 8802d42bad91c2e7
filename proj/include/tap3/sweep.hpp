#pragma once

// Pause-time sweeps over protocols and seeds, CSV assembly and SVG charts.

#include <cstdint>
#include <string>
#include <vector>

#include "tap3/config.hpp"
#include "tap3/metrics.hpp"
#include "tap3/simulator.hpp"

namespace tap3 {

struct SweepSpec {
  std::vector<double> pause_times;
  std::vector<ProtocolKind> protocols;
  std::vector<std::uint64_t> seeds;
  ScenarioConfig base;
};

/// `start:stop:step` (inclusive) or a comma list.
std::vector<double> parse_pause_list(const std::string& text);
/// `a..b` (inclusive) or a comma list.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);
std::vector<ProtocolKind> parse_protocol_list(const std::string& text);

struct SweepPoint {
  ProtocolKind protocol = ProtocolKind::TAP3;
  double pause_time = 0;
  std::vector<MetricsReport> seeds;
  MetricsReport average;
  std::uint64_t privacy_leaks = 0;
  std::uint64_t verdicts = 0;
  DetectorScore detector;  // summed over seeds
};

struct SweepResult {
  std::vector<SweepPoint> points;  // ordered by (protocol, pause)
  double wall_seconds = 0;
};

/// Runs every grid point, `threads` at a time (0 = hardware concurrency).
SweepResult run_sweep(const SweepSpec& spec, const SimParams& params = {}, unsigned threads = 0);

/// Header, then per point its seed rows followed by the averaged row.
std::string sweep_csv(const SweepResult& result);

/// pdr.svg, delay.svg and overhead.svg: averaged series against pause time.
void write_plots(const SweepResult& result, const std::string& dir);

}  // namespace tap3
