#pragma once

// Per-node forwarding evidence committed through Merkle trees, conjunctive
// inference rules, and the three route audits: destination log check,
// active (forging) attacker localisation and passive (dropping) attacker
// enumeration.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tap3/crypto.hpp"
#include "tap3/merkle.hpp"

namespace tap3 {

enum class LogEvent : std::uint8_t { Received = 1, Forwarded = 2, Replied = 3, Dropped = 4 };
const char* to_string(LogEvent e);
std::optional<LogEvent> parse_log_event(const std::string& s);

struct LogEntry {
  Pseudonym node_alias;
  std::uint64_t packet_id = 0;
  LogEvent event = LogEvent::Received;
  std::int64_t sseq = 0;
  std::int64_t oseq = 0;
  std::int64_t dseq = 0;
  Pseudonym prev_hop_alias;
  double timestamp = 0;
  bool operator==(const LogEntry&) const = default;
};

/// Canonical bytes: alias(32) | packet_id(8) | event(1) | sseq(8) | oseq(8) |
/// dseq(8) | prev_hop_alias(32) | timestamp in microseconds(8). Integers are
/// big-endian.
std::vector<std::uint8_t> serialize(const LogEntry& entry);
Digest leaf_hash(const LogEntry& entry);

Digest build_root(std::span<const LogEntry> entries);

class LogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MerkleCommitment {
  std::vector<Digest> leaves;
  Digest root{};
};

struct Disclosure {
  LogEntry entry;
  InclusionProof proof;
};

/// A conjunctive pattern over LogEntry fields; unset fields are wildcards. The
/// event field accepts a set of events.
struct Pattern {
  std::optional<Pseudonym> node_alias;
  std::optional<std::uint64_t> packet_id;
  std::uint8_t events = 0;  // bit (1 << event); 0 means any
  std::optional<std::int64_t> sseq;
  std::optional<std::int64_t> oseq;
  std::optional<std::int64_t> dseq;
  std::optional<Pseudonym> prev_hop_alias;

  static std::uint8_t bit(LogEvent e) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(e)); }
  bool matches(const LogEntry& e) const;
  bool operator==(const Pattern&) const = default;
};

Pattern exact_pattern(const LogEntry& entry);

/// One node's append-only log and its running commitment.
class NodeLog {
 public:
  NodeLog() = default;
  explicit NodeLog(Pseudonym alias) : alias_(alias) {}

  const Pseudonym& alias() const { return alias_; }
  const std::vector<LogEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// Rejects timestamp regressions and repeated (alias, packet_id, event).
  void append(const LogEntry& entry);
  bool try_append(const LogEntry& entry);

  Digest root() const { return tree_.root(); }
  MerkleCommitment commit() const;

  /// First entry matching `pattern` (among the first `prefix` entries) with a
  /// proof against the tree over that prefix.
  std::optional<Disclosure> disclose(const Pattern& pattern) const;
  std::optional<Disclosure> disclose(const Pattern& pattern, std::size_t prefix) const;

  /// Overwrites an entry after the fact and rebuilds the tree; models a node
  /// editing evidence it has already committed.
  void tamper(std::size_t index, const LogEntry& replacement);

  /// Tree over the first `prefix` entries (a historical commitment).
  Digest root_at(std::size_t prefix) const;

 private:
  struct Key {
    std::uint64_t packet_id;
    LogEvent event;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      return std::hash<std::uint64_t>{}(k.packet_id * 8 + static_cast<unsigned>(k.event));
    }
  };

  Pseudonym alias_;
  std::vector<LogEntry> entries_;
  MerkleTree tree_;
  std::unordered_set<Key, KeyHash> keys_;
  std::unordered_multimap<std::uint64_t, std::size_t> by_packet_;
};

void append_log(NodeLog& log, const LogEntry& entry);

/// A node taking part in an audit: the prover (its live log) plus the root it
/// published earlier. `log == nullptr` models a missing commitment.
struct AuditParty {
  Pseudonym alias;
  const NodeLog* log = nullptr;
  Digest published_root{};
  std::size_t published_size = 0;
};

AuditParty publish(const NodeLog& log);

enum class Fellowship { Fellow, NotFellow };
const char* to_string(Fellowship f);

/// Fellow iff every expected pattern is matched by a disclosed leaf whose
/// inclusion proof verifies against the published root. Verified
/// disclosures are appended to `evidence` when given.
Fellowship hash_verify(const AuditParty& party, std::span<const Pattern> expected,
                       std::vector<LogEntry>* evidence = nullptr);

/// Verifier-side check for a single disclosure.
bool verify_disclosure(const Disclosure& d, const Pattern& pattern, const Digest& root);

struct Rule {
  std::vector<Pattern> lhs;
  Pattern rhs;
};

/// Entry collection indexed by packet id for rule matching.
class EntrySet {
 public:
  EntrySet() = default;
  explicit EntrySet(std::span<const LogEntry> entries);
  void insert(const LogEntry& e);
  void insert(std::span<const LogEntry> es);
  bool contains_match(const Pattern& p) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<LogEntry> entries_;
  std::unordered_multimap<std::uint64_t, std::size_t> by_packet_;
};

/// rhs of every rule whose lhs patterns are all matched in `observed`, in
/// rule order, duplicates removed.
std::vector<Pattern> apply_rules(std::span<const Rule> rules, const EntrySet& observed);
std::vector<Pattern> apply_rules(std::span<const Rule> rules,
                                 std::span<const LogEntry> observed);

/// The rule sets the source derives from its own log.
struct RuleBook {
  std::vector<Rule> to_destination;    // source -> destination
  std::vector<Rule> to_intermediaries; // source -> intermediaries, control plane
  std::vector<Rule> combined;          // source + destination -> intermediaries, data plane
};

/// Instantiates the three rule templates for one route:
///  - an accepted RREP implies the destination logged Replied with the same
///    sequence fields, and every relay logged Received/Forwarded with them;
///  - a data packet the upstream hop forwarded must have been received by the
///    next hop, which must then log Forwarded or Dropped for it;
///  - a data packet the destination received must have been received and
///    forwarded by every relay.
RuleBook standard_rules(const Pseudonym& source_alias,
                        std::span<const Pseudonym> route_aliases,
                        const Pseudonym& destination_alias,
                        std::span<const LogEntry> tau_c);

Fellowship check_destination(std::span<const LogEntry> tau_c,
                             std::span<const Rule> rules_to_dest,
                             const AuditParty& destination);

struct ActiveDetection {
  bool target = false;                 // every relay verified: destination lied
  std::size_t attacker_position = 0;   // 1-based; n+1 when target
  std::size_t deepest_verified = 0;    // the N_m of the reverse scan, 0 if none
};

class AuditError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Reverse scan m = n..1; the first relay passing every check is N_m and the
/// forger is reported as position m+1 (Target when m = n).
ActiveDetection detect_active_attacker(std::span<const AuditParty> route,
                                       std::span<const LogEntry> tau_c,
                                       std::span<const Rule> rules_to_mid);

/// Forward scan j = 1..N. Expectations for relay j come from the rules
/// applied to tau_c, tau_d and the evidence already verified upstream; a relay
/// is listed on its first failed expectation.
std::vector<std::size_t> detect_passive_attackers(std::span<const AuditParty> route,
                                                  std::span<const LogEntry> tau_c,
                                                  std::span<const LogEntry> tau_d,
                                                  std::span<const Rule> rules_combined);

struct AuditReport {
  Fellowship verdict = Fellowship::Fellow;
  std::optional<ActiveDetection> active;
  std::vector<std::size_t> passive;
  bool operator==(const AuditReport& o) const {
    return verdict == o.verdict && active.has_value() == o.active.has_value() &&
           (!active || (active->target == o.active->target &&
                        active->attacker_position == o.active->attacker_position)) &&
           passive == o.passive;
  }
};

/// Destination disclosures of receipts for the data packets in tau_c.
std::vector<LogEntry> collect_destination_evidence(const AuditParty& destination,
                                                   std::span<const LogEntry> tau_c);

/// Runs the destination check and dispatches to the active or passive scan.
AuditReport audit_route(std::span<const AuditParty> route, const AuditParty& destination,
                        std::span<const LogEntry> tau_c, std::span<const LogEntry> tau_d,
                        const RuleBook& rules);

/// `flow_id,verdict,active_pos,passive_positions`
std::string audit_report_row(std::uint64_t flow_id, const AuditReport& report);

}  // namespace tap3
