#pragma once

// Run artifacts on disk and offline audit replay.
//
// `<trace>`          packet trace CSV
// `<trace>.audit`    every node's log plus the inputs of each route audit
// `<trace>.reports`  audit report rows
// `<trace>.verdicts` sequence-monitor verdict rows

#include <string>
#include <vector>

#include "tap3/simulator.hpp"

namespace tap3 {

class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_trace_files(const RunResult& result, const std::string& trace_path);
std::string audit_evidence_text(const RunResult& result);

struct ReplaySummary {
  std::size_t audits = 0;
  std::size_t mismatches = 0;
  std::vector<std::string> rows;  // report rows recomputed from the evidence
};

/// Re-runs every recorded audit against the recorded logs and published
/// sizes. Accepts the evidence file itself or the trace it accompanies.
ReplaySummary replay_audits(const std::string& path);
ReplaySummary replay_audit_text(const std::string& text);

}  // namespace tap3
