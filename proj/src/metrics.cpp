#include "tap3/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace tap3 {

std::optional<double> compute_pdr(std::uint64_t delivered, std::uint64_t sent) {
  if (delivered > sent) throw AccountingError("delivered exceeds sent");
  if (sent == 0) return std::nullopt;
  return 100.0 * static_cast<double>(delivered) / static_cast<double>(sent);
}

std::optional<double> compute_avg_delay(std::span<const std::pair<double, double>> pairs) {
  if (pairs.empty()) return std::nullopt;
  double sum = 0;
  for (const auto& [send, recv] : pairs) sum += recv - send;
  return sum / static_cast<double>(pairs.size());
}

double compute_overhead(std::uint64_t control_tx, std::uint64_t delivered_data) {
  if (delivered_data == 0) {
    return control_tx == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return static_cast<double>(control_tx) / static_cast<double>(delivered_data);
}

namespace {

std::string num(double v) {
  if (std::isinf(v)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12f", v);
  return buf;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : "NA"; }

}  // namespace

std::string metrics_csv_header() {
  return "protocol,pause_time_s,seed,pdr_percent,avg_delay_s,overhead_ratio,detected_active,"
         "detected_passive,false_positives";
}

std::string metrics_csv_row(const MetricsReport& r) {
  std::string row = to_string(r.protocol);
  row += "," + num(r.pause_time) + "," + r.seed + "," + opt(r.pdr) + "," + opt(r.avg_delay) + "," +
         num(r.overhead) + "," + num(r.detected_active) + "," + num(r.detected_passive) + "," +
         num(r.false_positives);
  return row;
}

MetricsReport average_reports(std::span<const MetricsReport> rows) {
  if (rows.empty()) throw std::invalid_argument("no rows to average");
  MetricsReport avg;
  avg.protocol = rows[0].protocol;
  avg.pause_time = rows[0].pause_time;
  avg.seed = "avg";
  double pdr = 0, delay = 0;
  std::size_t npdr = 0, ndelay = 0;
  for (const auto& r : rows) {
    if (r.pdr) pdr += *r.pdr, ++npdr;
    if (r.avg_delay) delay += *r.avg_delay, ++ndelay;
    avg.overhead += r.overhead;
    avg.detected_active += r.detected_active;
    avg.detected_passive += r.detected_passive;
    avg.false_positives += r.false_positives;
  }
  const double n = static_cast<double>(rows.size());
  if (npdr) avg.pdr = pdr / static_cast<double>(npdr);
  if (ndelay) avg.avg_delay = delay / static_cast<double>(ndelay);
  avg.overhead /= n;
  avg.detected_active /= n;
  avg.detected_passive /= n;
  avg.false_positives /= n;
  return avg;
}

}  // namespace tap3
