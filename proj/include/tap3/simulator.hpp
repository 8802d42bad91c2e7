#pragma once

// Deterministic discrete-event MANET simulator: random waypoint nodes,
// unit-disk links with per-node FIFO transmit queues, CBR flows and injected
// adversaries.

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tap3/config.hpp"
#include "tap3/log_audit.hpp"
#include "tap3/metrics.hpp"
#include "tap3/routing.hpp"

namespace tap3 {

/// Model constants not exposed in the config file.
struct SimParams {
  double link_rate_bps = 2e6;
  double propagation_speed = 3e8;
  double training_fraction = 0.1;  // attacker-silent learning period
  double audit_interval = 0;       // TAP3 route audits after training; 0 = one monitoring window
  double audit_grace = 1.0;        // packets younger than this are left for the next audit
  double flow_start_window = 2.0;  // flows start uniformly in [0, window)
};

/// Test hooks: fixed positions (no movement) and explicit flows.
struct ScenarioOverrides {
  std::optional<std::vector<std::pair<double, double>>> positions;
  std::optional<std::vector<FlowSpec>> flows;
};

struct RunOptions {
  SimParams params;
  ScenarioOverrides overrides;
  bool record_trace = false;  // keep trace rows, logs and audit records
};

/// Transmission time plus propagation time for one hop, or nullopt when the
/// receiver is out of range.
std::optional<double> link_delay(double distance, std::uint32_t bytes, double range,
                                 const SimParams& params);

/// Node-identity bytes of `id` found in a control header: its 8-byte
/// big-endian encoding inside either alias field, or the id in the route
/// record.
std::size_t identity_leaks(const Packet& p, NodeId id);

struct FlowCounters {
  FlowSpec spec;
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t lost = 0;
  std::uint64_t attacked = 0;
  std::uint64_t in_flight = 0;  // counted at the end of the run
};

/// Everything needed to replay one route audit offline.
struct AuditRecord {
  double time = 0;
  NodeId source = 0;
  std::uint64_t flow_id = 0;
  std::vector<NodeId> relays;
  NodeId destination = 0;
  std::vector<std::size_t> tau_c;  // indices into the source's log
  std::vector<std::pair<NodeId, std::size_t>> published;
  AuditReport report;
};

/// Sequence-monitor verdicts issued by honest nodes, split by ground truth.
struct DetectorScore {
  std::uint64_t clean = 0;
  std::uint64_t clean_flagged = 0;
  std::uint64_t forged = 0;
  std::uint64_t forged_flagged = 0;
  std::uint64_t strong = 0;  // forged with delta >= 3 sqrt(Th)
  std::uint64_t strong_flagged = 0;
};

struct RunResult {
  ScenarioConfig config;
  MetricsReport metrics;
  std::vector<FlowCounters> flows;
  std::uint64_t control_tx = 0;
  std::array<std::uint64_t, 6> tx_by_kind{};  // indexed by PacketKind
  std::uint64_t data_tx = 0;
  std::uint64_t events = 0;
  std::uint64_t privacy_leaks = 0;
  std::vector<double> discovery_latencies;
  std::set<NodeId> flagged;  // by honest nodes
  std::uint64_t verdicts = 0;
  std::uint64_t malicious_verdicts = 0;
  DetectorScore detector;
  bool positions_contained = true;

  // Filled when RunOptions::record_trace is set.
  std::vector<std::string> trace_rows;
  std::vector<std::string> verdict_rows;
  std::vector<std::string> report_rows;
  std::vector<NodeLog> logs;
  std::vector<AuditRecord> audits;
};

std::string trace_csv_header();

/// Validates the config and runs it to sim_duration.
RunResult run_scenario(const ScenarioConfig& config, const RunOptions& options = {});

}  // namespace tap3
