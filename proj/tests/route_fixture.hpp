#pragma once

// Hand-built route logs for audit oracles, shared by the unit tests and the
// acceptance runner.

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "tap3/log_audit.hpp"

namespace tap3::testing {

inline Pseudonym alias(std::uint64_t n) { return Pseudonym{sha256(encode_be64(n))}; }

inline constexpr std::uint64_t kRrep = 1;
inline constexpr std::int64_t kGenuine = 10;
inline constexpr std::int64_t kForged = kGenuine + 500;

// Builds the logs of one route S -> M1..Mn -> D entry by entry.
struct RouteFixture {
  std::size_t n;
  NodeLog source{alias(100)};
  std::vector<NodeLog> relays;
  NodeLog dest{alias(200)};
  double t = 0;

  explicit RouteFixture(std::size_t hops) : n(hops) {
    for (std::size_t i = 1; i <= n; ++i) relays.emplace_back(alias(i));
  }

  const Pseudonym& alias_of(std::size_t pos) const {
    if (pos == 0) return source.alias();
    if (pos == n + 1) return dest.alias();
    return relays[pos - 1].alias();
  }

  void log(NodeLog& l, std::uint64_t pid, LogEvent ev, std::int64_t dseq, std::size_t prev) {
    LogEntry e;
    e.node_alias = l.alias();
    e.packet_id = pid;
    e.event = ev;
    e.sseq = 5;
    e.oseq = 6;
    e.dseq = dseq;
    e.prev_hop_alias = alias_of(prev);
    e.timestamp = t += 0.001;
    l.append(e);
  }

  // Route reply as seen by each hop; `seen[i]` is the dseq relay i relayed.
  void reply(std::int64_t dest_logged, const std::vector<std::optional<std::int64_t>>& seen,
             std::int64_t at_source) {
    log(dest, kRrep, LogEvent::Replied, dest_logged, n);
    for (std::size_t i = n; i >= 1; --i) {
      if (!seen[i - 1]) continue;
      log(relays[i - 1], kRrep, LogEvent::Received, *seen[i - 1], i + 1);
      log(relays[i - 1], kRrep, LogEvent::Forwarded, *seen[i - 1], i + 1);
    }
    log(source, kRrep, LogEvent::Received, at_source, 1);
  }

  void honest_reply() { reply(kGenuine, std::vector<std::optional<std::int64_t>>(n, kGenuine), kGenuine); }

  // One data packet; it stops at relay `stop` (0 = delivered). `silent`
  // drops leave no trace, otherwise the relay logs Dropped.
  void data(std::uint64_t pid, std::size_t stop = 0, bool silent = false) {
    log(source, pid, LogEvent::Forwarded, 0, 0);
    for (std::size_t i = 1; i <= n; ++i) {
      if (i == stop) {
        if (!silent) {
          log(relays[i - 1], pid, LogEvent::Received, 0, i - 1);
          log(relays[i - 1], pid, LogEvent::Dropped, 0, i - 1);
        }
        return;
      }
      log(relays[i - 1], pid, LogEvent::Received, 0, i - 1);
      log(relays[i - 1], pid, LogEvent::Forwarded, 0, i - 1);
    }
    log(dest, pid, LogEvent::Received, 0, n);
  }

  AuditReport audit() const {
    std::vector<AuditParty> route;
    std::vector<Pseudonym> aliases;
    for (const auto& r : relays) {
      route.push_back(publish(r));
      aliases.push_back(r.alias());
    }
    const AuditParty d = publish(dest);
    const auto& tau_c = source.entries();
    const auto rules = standard_rules(source.alias(), aliases, dest.alias(), tau_c);
    const auto tau_d = collect_destination_evidence(d, tau_c);
    return audit_route(route, d, tau_c, tau_d, rules);
  }
};


/// Flips one bit of the entry's canonical serialization (event byte excluded)
/// by editing the corresponding field.
inline LogEntry flip_bit(LogEntry e, std::size_t bit) {
  // alias(256) | packet_id(64) | sseq(64) | oseq(64) | dseq(64) | prev(256) | time(64)
  auto flip64 = [](std::uint64_t v, std::size_t b) { return v ^ (std::uint64_t{1} << (63 - b)); };
  if (bit < 256) {
    e.node_alias.digest[bit / 8] ^= static_cast<std::uint8_t>(0x80u >> (bit % 8));
    return e;
  }
  bit -= 256;
  if (bit < 64) { e.packet_id = flip64(e.packet_id, bit); return e; }
  bit -= 64;
  if (bit < 64) { e.sseq = static_cast<std::int64_t>(flip64(static_cast<std::uint64_t>(e.sseq), bit)); return e; }
  bit -= 64;
  if (bit < 64) { e.oseq = static_cast<std::int64_t>(flip64(static_cast<std::uint64_t>(e.oseq), bit)); return e; }
  bit -= 64;
  if (bit < 64) { e.dseq = static_cast<std::int64_t>(flip64(static_cast<std::uint64_t>(e.dseq), bit)); return e; }
  bit -= 64;
  if (bit < 256) {
    e.prev_hop_alias.digest[bit / 8] ^= static_cast<std::uint8_t>(0x80u >> (bit % 8));
    return e;
  }
  bit -= 256;
  // Timestamps serialize as whole microseconds; keep the flip inside the
  // bits a double represents exactly.
  const auto us = static_cast<std::uint64_t>(std::llround(e.timestamp * 1e6));
  e.timestamp = static_cast<double>(us ^ (std::uint64_t{1} << (bit % 40))) / 1e6;
  return e;
}

inline constexpr std::size_t kFlippableBits = 256 + 64 * 4 + 256 + 64;

}  // namespace tap3::testing
