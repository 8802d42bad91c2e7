#include "tap3/log_audit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tap3 {

const char* to_string(LogEvent e) {
  switch (e) {
    case LogEvent::Received: return "Received";
    case LogEvent::Forwarded: return "Forwarded";
    case LogEvent::Replied: return "Replied";
    case LogEvent::Dropped: return "Dropped";
  }
  return "?";
}

std::optional<LogEvent> parse_log_event(const std::string& s) {
  if (s == "Received") return LogEvent::Received;
  if (s == "Forwarded") return LogEvent::Forwarded;
  if (s == "Replied") return LogEvent::Replied;
  if (s == "Dropped") return LogEvent::Dropped;
  return std::nullopt;
}

const char* to_string(Fellowship f) { return f == Fellowship::Fellow ? "FELLOW" : "NOT_FELLOW"; }

namespace {

void put_be64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  auto b = encode_be64(v);
  out.insert(out.end(), b.begin(), b.end());
}

}  // namespace

std::vector<std::uint8_t> serialize(const LogEntry& e) {
  std::vector<std::uint8_t> out;
  out.reserve(32 + 8 + 1 + 24 + 32 + 8);
  out.insert(out.end(), e.node_alias.digest.begin(), e.node_alias.digest.end());
  put_be64(out, e.packet_id);
  out.push_back(static_cast<std::uint8_t>(e.event));
  put_be64(out, static_cast<std::uint64_t>(e.sseq));
  put_be64(out, static_cast<std::uint64_t>(e.oseq));
  put_be64(out, static_cast<std::uint64_t>(e.dseq));
  out.insert(out.end(), e.prev_hop_alias.digest.begin(), e.prev_hop_alias.digest.end());
  put_be64(out, static_cast<std::uint64_t>(std::llround(e.timestamp * 1e6)));
  return out;
}

Digest leaf_hash(const LogEntry& entry) { return merkle_leaf_hash(serialize(entry)); }

Digest build_root(std::span<const LogEntry> entries) {
  std::vector<Digest> leaves;
  leaves.reserve(entries.size());
  for (const auto& e : entries) leaves.push_back(leaf_hash(e));
  return merkle_root(leaves);
}

bool Pattern::matches(const LogEntry& e) const {
  if (node_alias && *node_alias != e.node_alias) return false;
  if (packet_id && *packet_id != e.packet_id) return false;
  if (events != 0 && (events & bit(e.event)) == 0) return false;
  if (sseq && *sseq != e.sseq) return false;
  if (oseq && *oseq != e.oseq) return false;
  if (dseq && *dseq != e.dseq) return false;
  if (prev_hop_alias && *prev_hop_alias != e.prev_hop_alias) return false;
  return true;
}

Pattern exact_pattern(const LogEntry& e) {
  Pattern p;
  p.node_alias = e.node_alias;
  p.packet_id = e.packet_id;
  p.events = Pattern::bit(e.event);
  p.sseq = e.sseq;
  p.oseq = e.oseq;
  p.dseq = e.dseq;
  p.prev_hop_alias = e.prev_hop_alias;
  return p;
}

// ---------------------------------------------------------------------------

bool NodeLog::try_append(const LogEntry& entry) {
  if (!entries_.empty() && entry.timestamp < entries_.back().timestamp) return false;
  Key key{entry.packet_id, entry.event};
  if (keys_.contains(key)) return false;
  keys_.insert(key);
  by_packet_.emplace(entry.packet_id, entries_.size());
  entries_.push_back(entry);
  tree_.append(leaf_hash(entry));
  return true;
}

void NodeLog::append(const LogEntry& entry) {
  if (!entries_.empty() && entry.timestamp < entries_.back().timestamp) {
    throw LogError("log timestamp regression");
  }
  if (!try_append(entry)) throw LogError("duplicate log entry");
}

void append_log(NodeLog& log, const LogEntry& entry) { log.append(entry); }

MerkleCommitment NodeLog::commit() const { return MerkleCommitment{tree_.leaves(), tree_.root()}; }

Digest NodeLog::root_at(std::size_t prefix) const {
  prefix = std::min(prefix, entries_.size());
  if (prefix == entries_.size()) return tree_.root();
  return merkle_root(std::span<const Digest>(tree_.leaves().data(), prefix));
}

std::optional<Disclosure> NodeLog::disclose(const Pattern& pattern) const {
  return disclose(pattern, entries_.size());
}

std::optional<Disclosure> NodeLog::disclose(const Pattern& pattern, std::size_t prefix) const {
  prefix = std::min(prefix, entries_.size());
  std::optional<std::size_t> found;
  if (pattern.packet_id) {
    auto [lo, hi] = by_packet_.equal_range(*pattern.packet_id);
    for (auto it = lo; it != hi; ++it) {
      if (it->second < prefix && pattern.matches(entries_[it->second]) &&
          (!found || it->second < *found)) {
        found = it->second;
      }
    }
  } else {
    for (std::size_t i = 0; i < prefix; ++i) {
      if (pattern.matches(entries_[i])) {
        found = i;
        break;
      }
    }
  }
  if (!found) return std::nullopt;
  if (prefix == entries_.size()) return Disclosure{entries_[*found], tree_.prove(*found)};
  MerkleTree partial;
  partial.assign(std::span<const Digest>(tree_.leaves().data(), prefix));
  return Disclosure{entries_[*found], partial.prove(*found)};
}

void NodeLog::tamper(std::size_t index, const LogEntry& replacement) {
  entries_.at(index) = replacement;
  keys_.clear();
  by_packet_.clear();
  std::vector<Digest> leaves;
  leaves.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    keys_.insert(Key{entries_[i].packet_id, entries_[i].event});
    by_packet_.emplace(entries_[i].packet_id, i);
    leaves.push_back(leaf_hash(entries_[i]));
  }
  tree_.assign(leaves);
}

AuditParty publish(const NodeLog& log) {
  return AuditParty{log.alias(), &log, log.root(), log.size()};
}

bool verify_disclosure(const Disclosure& d, const Pattern& pattern, const Digest& root) {
  return pattern.matches(d.entry) && verify_inclusion(leaf_hash(d.entry), d.proof, root);
}

Fellowship hash_verify(const AuditParty& party, std::span<const Pattern> expected,
                       std::vector<LogEntry>* evidence) {
  if (party.log == nullptr) return Fellowship::NotFellow;
  for (const auto& pattern : expected) {
    auto d = party.log->disclose(pattern, party.published_size);
    if (!d || !verify_disclosure(*d, pattern, party.published_root)) {
      return Fellowship::NotFellow;
    }
    if (evidence) evidence->push_back(d->entry);
  }
  return Fellowship::Fellow;
}

// ---------------------------------------------------------------------------

EntrySet::EntrySet(std::span<const LogEntry> entries) { insert(entries); }

void EntrySet::insert(const LogEntry& e) {
  by_packet_.emplace(e.packet_id, entries_.size());
  entries_.push_back(e);
}

void EntrySet::insert(std::span<const LogEntry> es) {
  for (const auto& e : es) insert(e);
}

bool EntrySet::contains_match(const Pattern& p) const {
  if (p.packet_id) {
    auto [lo, hi] = by_packet_.equal_range(*p.packet_id);
    for (auto it = lo; it != hi; ++it) {
      if (p.matches(entries_[it->second])) return true;
    }
    return false;
  }
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const LogEntry& e) { return p.matches(e); });
}

std::vector<Pattern> apply_rules(std::span<const Rule> rules, const EntrySet& observed) {
  std::vector<Pattern> out;
  for (const auto& rule : rules) {
    bool all = std::all_of(rule.lhs.begin(), rule.lhs.end(),
                           [&](const Pattern& p) { return observed.contains_match(p); });
    if (all && std::find(out.begin(), out.end(), rule.rhs) == out.end()) {
      out.push_back(rule.rhs);
    }
  }
  return out;
}

std::vector<Pattern> apply_rules(std::span<const Rule> rules,
                                 std::span<const LogEntry> observed) {
  return apply_rules(rules, EntrySet(observed));
}

// ---------------------------------------------------------------------------

namespace {

Pattern node_event(const Pseudonym& alias, std::uint64_t packet, std::uint8_t events) {
  Pattern p;
  p.node_alias = alias;
  p.packet_id = packet;
  p.events = events;
  return p;
}

}  // namespace

RuleBook standard_rules(const Pseudonym& source_alias,
                        std::span<const Pseudonym> route_aliases,
                        const Pseudonym& destination_alias,
                        std::span<const LogEntry> tau_c) {
  const auto received = Pattern::bit(LogEvent::Received);
  const auto forwarded = Pattern::bit(LogEvent::Forwarded);
  const auto replied = Pattern::bit(LogEvent::Replied);
  const auto dropped = Pattern::bit(LogEvent::Dropped);

  RuleBook book;
  for (const auto& e : tau_c) {
    if (e.node_alias != source_alias) continue;
    if (e.event == LogEvent::Received) {
      // An accepted route reply.
      Pattern seen = node_event(source_alias, e.packet_id, received);
      Pattern at_dest = node_event(destination_alias, e.packet_id, replied);
      at_dest.sseq = e.sseq;
      at_dest.oseq = e.oseq;
      at_dest.dseq = e.dseq;
      book.to_destination.push_back(Rule{{seen}, at_dest});

      for (auto ev : {received, forwarded}) {
        Pattern relay;
        relay.packet_id = e.packet_id;
        relay.events = ev;
        relay.sseq = e.sseq;
        relay.oseq = e.oseq;
        relay.dseq = e.dseq;
        book.to_intermediaries.push_back(Rule{{seen}, relay});
      }
    } else if (e.event == LogEvent::Forwarded) {
      // A data packet the source put on this route.
      Pattern sent = node_event(source_alias, e.packet_id, forwarded);
      Pattern delivered = node_event(destination_alias, e.packet_id, received);
      for (auto ev : {received, forwarded}) {
        Pattern relay;
        relay.packet_id = e.packet_id;
        relay.events = ev;
        book.combined.push_back(Rule{{sent, delivered}, relay});
      }
      const Pseudonym* upstream = &source_alias;
      for (const auto& hop : route_aliases) {
        book.combined.push_back(Rule{{node_event(*upstream, e.packet_id, forwarded)},
                                     node_event(hop, e.packet_id, received)});
        book.combined.push_back(Rule{{node_event(hop, e.packet_id, received)},
                                     node_event(hop, e.packet_id, forwarded | dropped)});
        upstream = &hop;
      }
    }
  }
  return book;
}

Fellowship check_destination(std::span<const LogEntry> tau_c,
                             std::span<const Rule> rules_to_dest,
                             const AuditParty& destination) {
  if (destination.log == nullptr) return Fellowship::NotFellow;
  const auto records = apply_rules(rules_to_dest, tau_c);
  Fellowship outcome = Fellowship::Fellow;
  for (const auto& record : records) {
    outcome = hash_verify(destination, std::span<const Pattern>(&record, 1));
    if (outcome != Fellowship::Fellow) break;
  }
  return outcome;
}

ActiveDetection detect_active_attacker(std::span<const AuditParty> route,
                                       std::span<const LogEntry> tau_c,
                                       std::span<const Rule> rules_to_mid) {
  if (route.empty()) throw AuditError("no intermediaries");
  const auto records = apply_rules(rules_to_mid, tau_c);
  const std::size_t n = route.size();
  for (std::size_t m = n; m >= 1; --m) {
    bool flag = false;
    for (const auto& record : records) {
      if (hash_verify(route[m - 1], std::span<const Pattern>(&record, 1)) !=
          Fellowship::Fellow) {
        flag = true;
        break;
      }
    }
    if (!flag) {
      if (m == n) return ActiveDetection{true, n + 1, n};
      return ActiveDetection{false, m + 1, m};
    }
  }
  // Not even n_1 verified: the forger sits right after the source.
  return ActiveDetection{false, 1, 0};
}

std::vector<std::size_t> detect_passive_attackers(std::span<const AuditParty> route,
                                                  std::span<const LogEntry> tau_c,
                                                  std::span<const LogEntry> tau_d,
                                                  std::span<const Rule> rules_combined) {
  std::vector<std::size_t> fake_nodes;
  EntrySet observed(tau_c);
  observed.insert(tau_d);

  for (std::size_t j = 1; j <= route.size(); ++j) {
    const AuditParty& node = route[j - 1];
    std::vector<Pattern> attempted;
    bool failed = false;
    // Expectations for this relay may depend on its own verified entries, so
    // iterate to a fixpoint. The accusation is fixed by the first failure; the
    // remaining verified entries still count as evidence for later relays.
    for (;;) {
      std::vector<Pattern> fresh;
      for (auto& p : apply_rules(rules_combined, observed)) {
        if (p.node_alias && *p.node_alias != node.alias) continue;
        if (std::find(attempted.begin(), attempted.end(), p) != attempted.end()) continue;
        fresh.push_back(std::move(p));
      }
      if (fresh.empty()) break;
      for (auto& p : fresh) {
        std::vector<LogEntry> proven;
        if (hash_verify(node, std::span<const Pattern>(&p, 1), &proven) == Fellowship::Fellow) {
          observed.insert(proven);
        } else {
          failed = true;
        }
        attempted.push_back(std::move(p));
      }
    }
    if (failed) fake_nodes.push_back(j);
  }
  return fake_nodes;
}

std::vector<LogEntry> collect_destination_evidence(const AuditParty& destination,
                                                   std::span<const LogEntry> tau_c) {
  std::vector<LogEntry> tau_d;
  if (destination.log == nullptr) return tau_d;
  for (const auto& e : tau_c) {
    if (e.event != LogEvent::Forwarded) continue;
    Pattern p = node_event(destination.alias, e.packet_id, Pattern::bit(LogEvent::Received));
    hash_verify(destination, std::span<const Pattern>(&p, 1), &tau_d);
  }
  return tau_d;
}

AuditReport audit_route(std::span<const AuditParty> route, const AuditParty& destination,
                        std::span<const LogEntry> tau_c, std::span<const LogEntry> tau_d,
                        const RuleBook& rules) {
  AuditReport report;
  report.verdict = check_destination(tau_c, rules.to_destination, destination);
  if (report.verdict == Fellowship::NotFellow) {
    if (route.empty()) {
      report.active = ActiveDetection{true, 1, 0};
    } else {
      report.active = detect_active_attacker(route, tau_c, rules.to_intermediaries);
    }
  } else {
    report.passive = detect_passive_attackers(route, tau_c, tau_d, rules.combined);
  }
  return report;
}

std::string audit_report_row(std::uint64_t flow_id, const AuditReport& report) {
  std::ostringstream os;
  os << flow_id << ',' << to_string(report.verdict) << ',';
  if (report.active) {
    if (report.active->target) {
      os << "target";
    } else {
      os << report.active->attacker_position;
    }
  }
  os << ',';
  for (std::size_t i = 0; i < report.passive.size(); ++i) {
    if (i) os << ';';
    os << report.passive[i];
  }
  return os.str();
}

}  // namespace tap3
