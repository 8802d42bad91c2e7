#include "tap3/routing.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace tap3 {

const char* to_string(ProtocolKind p) {
  switch (p) {
    case ProtocolKind::TAP3: return "tap3";
    case ProtocolKind::S_MPRF: return "smprf";
    case ProtocolKind::MPRF: return "mprf";
  }
  return "?";
}

std::optional<ProtocolKind> parse_protocol(const std::string& s) {
  std::string lower;
  for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "tap3") return ProtocolKind::TAP3;
  if (lower == "smprf" || lower == "s-mprf") return ProtocolKind::S_MPRF;
  if (lower == "mprf") return ProtocolKind::MPRF;
  return std::nullopt;
}

const char* to_string(PacketKind k) {
  switch (k) {
    case PacketKind::Rreq: return "RREQ";
    case PacketKind::Rrep: return "RREP";
    case PacketKind::RrepAck: return "RREP_ACK";
    case PacketKind::Rerr: return "RERR";
    case PacketKind::Data: return "DATA";
    case PacketKind::Audit: return "AUDIT";
  }
  return "?";
}

const char* to_string(AttackKind a) {
  switch (a) {
    case AttackKind::BlackHole: return "BlackHole";
    case AttackKind::SeqInflation: return "SeqInflation";
    case AttackKind::PassiveDrop: return "PassiveDrop";
    case AttackKind::LogForgery: return "LogForgery";
  }
  return "?";
}

std::optional<AttackKind> parse_attack(const std::string& s) {
  std::string lower;
  for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "blackhole") return AttackKind::BlackHole;
  if (lower == "seqinflation") return AttackKind::SeqInflation;
  if (lower == "passivedrop") return AttackKind::PassiveDrop;
  if (lower == "logforgery") return AttackKind::LogForgery;
  return std::nullopt;
}

namespace {

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  auto b = encode_be64(v);
  out.insert(out.end(), b.begin(), b.end());
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

}  // namespace

std::vector<std::uint8_t> header_bytes(const Packet& p) {
  std::vector<std::uint8_t> out;
  out.reserve(160 + 4 * p.route_record.size());
  out.push_back(static_cast<std::uint8_t>(p.kind));
  put_u64(out, p.packet_id);
  out.insert(out.end(), p.forward_alias.digest.begin(), p.forward_alias.digest.end());
  out.insert(out.end(), p.reverse_alias.digest.begin(), p.reverse_alias.digest.end());
  switch (p.kind) {
    case PacketKind::Rreq:
    case PacketKind::Rrep:
      put_u64(out, static_cast<std::uint64_t>(p.sseq));
      put_u64(out, static_cast<std::uint64_t>(p.oseq));
      put_u64(out, static_cast<std::uint64_t>(p.dseq));
      put_u32(out, p.hop_count);
      put_u32(out, static_cast<std::uint32_t>(p.route_record.size()));
      for (NodeId n : p.route_record) put_u32(out, n);
      if (p.kind == PacketKind::Rrep) {
        put_u64(out, p.rreq_id);
        put_u64(out, p.path_id);
        out.insert(out.end(), p.tag.begin(), p.tag.end());
      }
      break;
    case PacketKind::RrepAck:
      put_u64(out, p.rreq_id);
      out.insert(out.end(), p.tag.begin(), p.tag.end());
      break;
    case PacketKind::Rerr:
    case PacketKind::Data:
      put_u64(out, p.path_id);
      break;
    case PacketKind::Audit:
      break;
  }
  return out;
}

std::uint32_t wire_size(const Packet& p) {
  if (p.kind == PacketKind::Data) return p.payload_size;
  return static_cast<std::uint32_t>(header_bytes(p).size());
}

Pseudonym address_alias(NodeId id) {
  Pseudonym a;
  auto b = encode_be64(id);
  std::copy(b.begin(), b.end(), a.digest.begin());
  return a;
}

// ---------------------------------------------------------------------------

std::vector<Path> select_paths(ProtocolKind protocol, std::span<const Path> discovered,
                               const std::set<NodeId>& suspects) {
  std::vector<Path> usable;
  for (const auto& p : discovered) {
    if (protocol == ProtocolKind::TAP3 &&
        (suspects.contains(p.next_hop) ||
         std::any_of(p.relays.begin(), p.relays.end(),
                     [&](NodeId r) { return suspects.contains(r); }))) {
      continue;
    }
    usable.push_back(p);
  }
  if (usable.empty()) throw RouteError("no route");
  if (protocol == ProtocolKind::TAP3) {
    std::stable_sort(usable.begin(), usable.end(), [](const Path& a, const Path& b) {
      if (a.hop_count != b.hop_count) return a.hop_count < b.hop_count;
      return a.discovered_at < b.discovered_at;
    });
  } else {
    std::stable_sort(usable.begin(), usable.end(), [](const Path& a, const Path& b) {
      if (a.dseq != b.dseq) return a.dseq > b.dseq;
      if (a.hop_count != b.hop_count) return a.hop_count < b.hop_count;
      return a.discovered_at < b.discovered_at;
    });
  }
  return usable;
}

std::size_t assign_path(ProtocolKind protocol, std::span<const Path> usable,
                        std::uint64_t& cursor) {
  if (usable.empty()) throw RouteError("no route");
  if (protocol != ProtocolKind::TAP3) return 0;
  std::size_t shortest = 0;
  while (shortest < usable.size() && usable[shortest].hop_count == usable[0].hop_count) {
    ++shortest;
  }
  return static_cast<std::size_t>(cursor++ % shortest);
}

RouterOptions RouterOptions::for_protocol(ProtocolKind p) {
  RouterOptions o;
  o.protocol = p;
  o.trust_layer = p == ProtocolKind::TAP3;
  o.rotate_aliases = p == ProtocolKind::TAP3;
  o.pseudonymous = p != ProtocolKind::MPRF;
  o.authenticate = p != ProtocolKind::MPRF;
  return o;
}

// ---------------------------------------------------------------------------

namespace {

Pseudonym derive_log_alias(const MasterKey& master) {
  static const std::string label = "log-alias";
  return Pseudonym{hmac_sha256(master.bytes, std::span<const std::uint8_t>(
                                                 reinterpret_cast<const std::uint8_t*>(label.data()),
                                                 label.size()))};
}

}  // namespace

Router::Router(NodeId id, MasterKey master, RouterOptions options)
    : id_(id), master_(master), options_(options), log_(derive_log_alias(master)) {}

void Router::install_sender_key(const PairwiseKey& key) {
  if (key.sender != id_) throw ConfigError("pairwise key installed at the wrong node");
  sender_keys_[key.receiver] = key;
}

void Router::install_trapdoor_for(NodeId peer) {
  trapdoor_.add_chain(derive_pairwise_key(master_, id_, peer), peer, id_,
                      ChainDirection::ForwardOfDestination);
}

void Router::add_flow(const FlowSpec& spec) {
  if (spec.source != id_) throw ConfigError("flow added at a node that is not its source");
  FlowState flow;
  flow.spec = spec;
  if (options_.pseudonymous) {
    auto it = sender_keys_.find(spec.destination);
    if (it == sender_keys_.end()) throw ConfigError("no pairwise key for flow destination");
    flow.key = it->second;
    flow.ps.emplace(flow.key, id_, ChainDirection::ForwardOfSource);
    flow.pd.emplace(flow.key, spec.destination, ChainDirection::ForwardOfDestination);
  }
  flows_[spec.flow_id] = std::move(flow);
}

bool Router::is_attacking(const Network& net, AttackKind kind) const {
  return attack_ && attack_->kind == kind && net.attacks_active();
}

void Router::log_event(Network& net, const Packet& p, LogEvent ev, NodeId prev_hop) {
  if (!options_.trust_layer) return;
  LogEntry e;
  e.node_alias = log_.alias();
  e.packet_id = p.packet_id;
  e.event = ev;
  e.sseq = p.sseq;
  e.oseq = p.oseq;
  e.dseq = p.dseq;
  e.prev_hop_alias = net.log_alias_of(prev_hop);
  e.timestamp = net.now();
  if (is_attacking(net, AttackKind::LogForgery)) {
    // Commits a fabricated record in place of the real one.
    e.packet_id = p.packet_id ^ 0x5a5a5a5a00000000ull;
  }
  log_.try_append(e);
}

std::vector<std::uint8_t> reply_auth_message(const Packet& rrep) {
  std::vector<std::uint8_t> msg;
  put_u64(msg, rrep.rreq_id);
  msg.insert(msg.end(), rrep.forward_alias.digest.begin(), rrep.forward_alias.digest.end());
  msg.insert(msg.end(), rrep.reverse_alias.digest.begin(), rrep.reverse_alias.digest.end());
  for (NodeId n : rrep.route_record) put_u32(msg, n);
  return msg;
}

Digest Router::reply_tag(const PairwiseKey& key, const Packet& rrep) const {
  return hmac_tag(key, reply_auth_message(rrep));
}

void Router::flag(Network& net, NodeId suspect) {
  if (suspect == id_) return;
  if (suspects_.insert(suspect).second) net.on_flag(id_, suspect);
}

std::optional<Verdict> Router::monitor(Network& net, const SeqVector& v, double forged_delta) {
  if (!options_.trust_layer) return std::nullopt;
  if (net.training_phase()) {
    window_.add(v);
    return std::nullopt;
  }
  if (!window_.trained()) return std::nullopt;
  const double now = net.now();
  const double epoch = net.monitor_epoch();
  if (next_epoch_at_ < 0) next_epoch_at_ = now + epoch;
  while (now >= next_epoch_at_) {
    if (!batch_.empty()) window_ = advance_window(window_, batch_);
    batch_.clear();
    next_epoch_at_ += epoch;
  }
  Verdict verdict = classify(v, window_);
  net.on_verdict(id_, v, verdict, window_.threshold(), forged_delta);
  batch_.push_back(v);
  return verdict;
}

std::vector<Path> Router::paths(std::uint64_t flow_id) const {
  auto it = flows_.find(flow_id);
  return it == flows_.end() ? std::vector<Path>{} : it->second.paths;
}

std::size_t Router::buffered() const {
  std::size_t n = 0;
  for (const auto& [_, f] : flows_) n += f.buffer.size();
  return n;
}

std::size_t Router::buffered(std::uint64_t flow_id) const {
  auto it = flows_.find(flow_id);
  return it == flows_.end() ? 0 : it->second.buffer.size();
}

Router::FlowState* Router::flow_by_aliases(const Pseudonym& ps, const Pseudonym& pd) {
  auto it = alias_flows_.find({ps, pd});
  if (it == alias_flows_.end()) return nullptr;
  return &flows_.at(it->second);
}

}  // namespace tap3
