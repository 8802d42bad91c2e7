#pragma once

// Per-node routing state machine: pseudonymous route discovery with
// multipath replies, sequence-number monitoring on relayed replies, data
// dispersal and route audits for TAP3; plain-address (MPRF) and
// static-pseudonym (S-MPRF) multipath baselines.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "tap3/crypto.hpp"
#include "tap3/log_audit.hpp"
#include "tap3/seq_monitor.hpp"

namespace tap3 {

enum class ProtocolKind { TAP3, S_MPRF, MPRF };
const char* to_string(ProtocolKind p);
std::optional<ProtocolKind> parse_protocol(const std::string& s);

enum class PacketKind : std::uint8_t { Rreq, Rrep, RrepAck, Rerr, Data, Audit };
const char* to_string(PacketKind k);
inline bool is_control(PacketKind k) { return k != PacketKind::Data; }

/// Control kinds charged to routing overhead. Route errors are excluded.
inline bool counts_as_overhead(PacketKind k) {
  return k == PacketKind::Rreq || k == PacketKind::Rrep || k == PacketKind::RrepAck ||
         k == PacketKind::Audit;
}

enum class AttackKind { BlackHole, SeqInflation, PassiveDrop, LogForgery };
const char* to_string(AttackKind a);
std::optional<AttackKind> parse_attack(const std::string& s);

struct AttackSpec {
  NodeId node = 0;
  AttackKind kind = AttackKind::BlackHole;
  double param = 0;  // delta for BlackHole / SeqInflation, drop probability for PassiveDrop
  bool operator==(const AttackSpec&) const = default;
};

/// Simulation-side bookkeeping carried alongside a packet; never serialized.
struct PacketMeta {
  std::uint64_t flow_id = 0;
  double created_at = 0;
  double forged_delta = 0;  // dseq inflation added by adversaries, for scoring only
};

struct Packet {
  PacketKind kind = PacketKind::Data;
  std::uint64_t packet_id = 0;
  Pseudonym forward_alias;  // PD_i, or the destination address under MPRF
  Pseudonym reverse_alias;  // PS_i, or the source address under MPRF
  std::int64_t sseq = 0;
  std::int64_t oseq = 0;
  std::int64_t dseq = 0;
  std::uint64_t rreq_id = 0;  // RREP / RREP_ACK: the request being answered
  std::uint64_t path_id = 0;
  std::uint32_t hop_count = 0;
  std::vector<NodeId> route_record;  // relays only, source side first
  Digest tag{};
  std::uint32_t payload_size = 0;
  PacketMeta meta;
};

/// Header bytes as they appear on the air (payload excluded).
std::vector<std::uint8_t> header_bytes(const Packet& p);
/// Bytes occupying the channel: the header for control packets, the
/// configured packet length for data.
std::uint32_t wire_size(const Packet& p);

/// Bytes the destination authenticates in a reply: request id, both aliases
/// and the route record. Sequence numbers are left out, as they are in AODV.
std::vector<std::uint8_t> reply_auth_message(const Packet& rrep);

/// Pseudonym-shaped carrier for a plaintext address (MPRF).
Pseudonym address_alias(NodeId id);

enum class Trust { Normal, Suspect };

struct RouteEntry {
  Pseudonym fellow_alias;
  NodeId next_hop = 0;
  std::uint64_t path_id = 0;
  Trust trust = Trust::Normal;
  double established_at = 0;
};

/// A source-side route to one destination.
struct Path {
  std::uint64_t path_id = 0;
  NodeId next_hop = 0;
  std::vector<NodeId> relays;
  std::uint32_t hop_count = 0;
  double discovered_at = 0;
  std::int64_t dseq = 0;
  Pseudonym forward_alias;
  Pseudonym reverse_alias;
  std::uint64_t rrep_id = 0;
};

class RouteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Usable paths in sending order. TAP3 drops every path through a suspect
/// node and orders by hop count then discovery time. The baselines have no
/// trust layer; they keep every path and prefer the freshest destination
/// sequence number first, as AODV does. Throws RouteError when nothing is
/// left.
std::vector<Path> select_paths(ProtocolKind protocol, std::span<const Path> discovered,
                               const std::set<NodeId>& suspects);

/// Index into `usable` for the next data packet. TAP3 cycles over the
/// minimum-hop paths; the baselines always use the first.
std::size_t assign_path(ProtocolKind protocol, std::span<const Path> usable,
                        std::uint64_t& cursor);

enum class RreqAction { Reply, Forward, Discard };
enum class RrepAction { Accept, Forward, Flag, Discard };

enum class DropCause { Loss, Attack };

/// Services the simulator provides to a node's event handlers.
class Network {
 public:
  virtual ~Network() = default;
  virtual double now() const = 0;
  virtual void broadcast(NodeId from, Packet packet, double jitter) = 0;
  virtual void unicast(NodeId from, NodeId to, Packet packet) = 0;
  virtual void start_discovery_timer(NodeId node, std::uint64_t flow_id,
                                     std::uint64_t attempt, double delay) = 0;
  virtual std::uint64_t next_packet_id() = 0;
  virtual std::mt19937_64& rng(NodeId node) = 0;
  virtual bool attacks_active() const = 0;
  virtual bool training_phase() const = 0;
  virtual double monitor_epoch() const = 0;
  virtual const Pseudonym& log_alias_of(NodeId node) const = 0;

  virtual void on_data_delivered(const Packet& p) = 0;
  virtual void on_data_dropped(const Packet& p, DropCause cause) = 0;
  virtual void on_verdict(NodeId node, const SeqVector& v, const Verdict& verdict,
                          double threshold, double forged_delta) = 0;
  virtual void on_flag(NodeId flagger, NodeId suspect) = 0;
  virtual void on_discovery_complete(NodeId source, std::uint64_t flow_id, double elapsed) = 0;
};

struct FlowSpec {
  std::uint64_t flow_id = 0;
  NodeId source = 0;
  NodeId destination = 0;
};

struct RouterOptions {
  ProtocolKind protocol = ProtocolKind::TAP3;
  bool trust_layer = true;      // sequence monitor + audits + exclusion
  bool rotate_aliases = true;   // fresh PS/PD per discovery round
  bool pseudonymous = true;     // aliases instead of plaintext addresses
  bool authenticate = true;     // destination HMAC on replies
  std::size_t max_paths = 3;
  std::size_t buffer_limit = 64;
  std::uint32_t hop_limit = 16;
  double rebroadcast_jitter = 0.01;
  double discovery_backoff_start = 1.0;
  double discovery_backoff_cap = 8.0;

  static RouterOptions for_protocol(ProtocolKind p);
};

/// Source-side bookkeeping for one audited path.
struct PathEvidence {
  Path path;
  NodeId destination = 0;
  std::size_t rrep_entry = 0;            // index in the source's log
  std::vector<std::size_t> data_entries; // indices in the source's log
  std::size_t audited_upto = 0;          // data_entries already covered
};

class Router {
 public:
  Router(NodeId id, MasterKey master, RouterOptions options);

  NodeId id() const { return id_; }
  const RouterOptions& options() const { return options_; }

  /// Key pre-distribution: K_{self, peer} as derived by the peer.
  void install_sender_key(const PairwiseKey& key);
  /// Registers the PD chain a peer would use to reach this node.
  void install_trapdoor_for(NodeId peer);

  void set_attack(std::optional<AttackSpec> attack) { attack_ = attack; }
  const std::optional<AttackSpec>& attack() const { return attack_; }

  void add_flow(const FlowSpec& flow);

  // ---- control plane
  Packet originate_route_request(Network& net, std::uint64_t flow_id);
  RreqAction handle_rreq(Network& net, const Packet& rreq, NodeId from);
  RrepAction handle_rrep(Network& net, const Packet& rrep, NodeId from);
  void handle_rrep_ack(Network& net, const Packet& ack, NodeId from);
  void handle_rerr(Network& net, const Packet& rerr, NodeId from);
  void on_discovery_timeout(Network& net, std::uint64_t flow_id, std::uint64_t attempt);

  // ---- data plane
  void app_send(Network& net, std::uint64_t flow_id, std::uint32_t payload_size);
  void handle_data(Network& net, const Packet& data, NodeId from);
  /// Link-layer outcome of a unicast this node transmitted.
  void on_unicast_result(Network& net, const Packet& p, NodeId to, bool delivered);

  // ---- trust layer
  struct AuditOutcome {
    std::uint64_t flow_id;
    Path path;
    AuditReport report;
    std::vector<NodeId> accused;
    std::size_t messages;  // control transmissions spent on the exchange
    std::vector<std::size_t> tau_c;  // indices in this node's log
    std::vector<std::pair<NodeId, std::size_t>> published;  // (node, log size) per hop incl. destination
  };
  using LogLookup = const NodeLog* (*)(const void* ctx, NodeId node);
  std::vector<AuditOutcome> audit_flows(Network& net, double cutoff,
                                        const void* ctx, LogLookup lookup);

  const std::set<NodeId>& suspects() const { return suspects_; }
  const TrainingWindow& window() const { return window_; }
  const NodeLog& log() const { return log_; }
  NodeLog& mutable_log() { return log_; }
  const Pseudonym& log_alias() const { return log_.alias(); }
  std::vector<Path> paths(std::uint64_t flow_id) const;
  std::size_t buffered() const;
  std::size_t buffered(std::uint64_t flow_id) const;
  const std::unordered_map<std::uint64_t, std::vector<Path>>& discovered_paths() const {
    return discovered_;
  }

 private:
  struct RreqInfo {
    std::int64_t sseq, oseq, dseq;
  };
  struct ReverseEntry {
    NodeId next_hop;
    RreqInfo info;
    std::uint64_t rreq_id;
    double established_at;
  };
  struct FlowState {
    FlowSpec spec;
    std::optional<PseudonymChain> ps;
    std::optional<PseudonymChain> pd;
    PairwiseKey key;
    std::uint64_t rounds = 0;
    std::int64_t known_dseq = 0;
    std::int64_t next_sseq = 0;
    bool discovering = false;
    std::uint64_t attempt = 0;
    double discovery_started = 0;
    std::map<std::uint64_t, RreqInfo> outstanding;  // rreq id -> carried seqs
    std::vector<Path> paths;
    std::uint64_t cursor = 0;
    std::deque<Packet> buffer;
  };
  struct FellowEntry {
    NodeId peer;
    PairwiseKey key;
  };
  struct ReplyState {
    std::vector<std::vector<NodeId>> records;
  };

  bool is_attacking(const Network& net, AttackKind kind) const;
  void log_event(Network& net, const Packet& p, LogEvent ev, NodeId prev_hop);
  Digest reply_tag(const PairwiseKey& key, const Packet& rrep) const;
  void flag(Network& net, NodeId suspect);
  std::optional<Verdict> monitor(Network& net, const SeqVector& v, double forged_delta);
  void start_discovery(Network& net, FlowState& flow);
  void send_on_paths(Network& net, FlowState& flow, Packet data);
  void flush_buffer(Network& net, FlowState& flow);
  void buffer_packet(Network& net, FlowState& flow, Packet data);
  void remove_path(Network& net, FlowState& flow, std::uint64_t path_id, bool rediscover);
  void send_rerr(Network& net, const Packet& about);
  FlowState* flow_by_aliases(const Pseudonym& ps, const Pseudonym& pd);

  NodeId id_;
  MasterKey master_;
  RouterOptions options_;
  std::optional<AttackSpec> attack_;

  std::map<NodeId, PairwiseKey> sender_keys_;
  TrapdoorIndex trapdoor_;
  std::map<Pseudonym, FellowEntry> fellows_;           // aliases recognised as ours
  std::map<std::pair<Pseudonym, std::int64_t>, ReplyState> replies_;
  std::set<std::pair<std::int64_t, Pseudonym>> seen_rreq_;
  std::map<Pseudonym, ReverseEntry> reverse_;
  std::map<std::pair<Pseudonym, std::uint64_t>, RouteEntry> forward_;
  std::int64_t own_seq_ = 0;
  std::int64_t dest_seq_ = 0;

  std::map<std::uint64_t, FlowState> flows_;
  std::map<std::pair<Pseudonym, Pseudonym>, std::uint64_t> alias_flows_;  // (PS, PD) ever sent
  std::unordered_map<std::uint64_t, std::vector<Path>> discovered_;
  std::map<std::uint64_t, PathEvidence> evidence_;  // by path id
  std::set<std::uint64_t> delivered_;

  TrainingWindow window_;
  std::vector<SeqVector> batch_;
  double next_epoch_at_ = -1;
  std::set<NodeId> suspects_;
  NodeLog log_;
};

}  // namespace tap3
