#pragma once

// Per-run metrics and their CSV form.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tap3/routing.hpp"

namespace tap3 {

class AccountingError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// 100 * delivered / sent; nullopt when nothing was sent.
std::optional<double> compute_pdr(std::uint64_t delivered, std::uint64_t sent);

/// Mean of receive - send over delivered packets; nullopt when empty.
std::optional<double> compute_avg_delay(std::span<const std::pair<double, double>> send_receive);

/// Control transmissions per delivered data packet; +inf when control traffic
/// delivered nothing, 0 when there was neither.
double compute_overhead(std::uint64_t control_tx, std::uint64_t delivered_data);

struct MetricsReport {
  ProtocolKind protocol = ProtocolKind::TAP3;
  double pause_time = 0;
  std::string seed;  // decimal seed, or "avg" for seed-averaged rows
  std::optional<double> pdr;
  std::optional<double> avg_delay;
  double overhead = 0;
  double detected_active = 0;
  double detected_passive = 0;
  double false_positives = 0;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsReport& r);

/// Arithmetic mean of the seed rows; optional fields average over the rows
/// that have them.
MetricsReport average_reports(std::span<const MetricsReport> rows);

}  // namespace tap3
