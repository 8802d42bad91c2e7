// Data forwarding, route maintenance and source-driven route audits.

#include <algorithm>

#include "tap3/routing.hpp"

namespace tap3 {

void Router::app_send(Network& net, std::uint64_t flow_id, std::uint32_t payload_size) {
  auto it = flows_.find(flow_id);
  if (it == flows_.end()) throw ConfigError("unknown flow");
  Packet data;
  data.kind = PacketKind::Data;
  data.packet_id = net.next_packet_id();
  data.payload_size = payload_size;
  data.meta.flow_id = flow_id;
  data.meta.created_at = net.now();
  send_on_paths(net, it->second, std::move(data));
}

void Router::send_on_paths(Network& net, FlowState& flow, Packet data) {
  std::vector<Path> usable;
  try {
    usable = select_paths(options_.protocol, flow.paths, suspects_);
  } catch (const RouteError&) {
    buffer_packet(net, flow, std::move(data));
    start_discovery(net, flow);
    return;
  }
  const Path& path = usable[assign_path(options_.protocol, usable, flow.cursor)];
  data.forward_alias = path.forward_alias;
  data.reverse_alias = path.reverse_alias;
  data.path_id = path.path_id;
  net.unicast(id_, path.next_hop, std::move(data));
}

void Router::buffer_packet(Network& net, FlowState& flow, Packet data) {
  if (flow.buffer.size() >= options_.buffer_limit) {
    net.on_data_dropped(data, DropCause::Loss);
    return;
  }
  flow.buffer.push_back(std::move(data));
}

void Router::flush_buffer(Network& net, FlowState& flow) {
  std::deque<Packet> pending;
  pending.swap(flow.buffer);
  while (!pending.empty()) {
    send_on_paths(net, flow, std::move(pending.front()));
    pending.pop_front();
  }
}

void Router::remove_path(Network& net, FlowState& flow, std::uint64_t path_id, bool rediscover) {
  if (options_.protocol == ProtocolKind::TAP3) {
    std::erase_if(flow.paths, [&](const Path& p) { return p.path_id == path_id; });
  } else {
    // The baselines route on a single best path and start over when it breaks.
    flow.paths.clear();
  }
  bool usable = true;
  try {
    (void)select_paths(options_.protocol, flow.paths, suspects_);
  } catch (const RouteError&) {
    usable = false;
  }
  if (!usable && rediscover) start_discovery(net, flow);
}

void Router::send_rerr(Network& net, const Packet& about) {
  auto rev = reverse_.find(about.reverse_alias);
  if (rev == reverse_.end()) return;
  Packet rerr;
  rerr.kind = PacketKind::Rerr;
  rerr.packet_id = net.next_packet_id();
  rerr.forward_alias = about.forward_alias;
  rerr.reverse_alias = about.reverse_alias;
  rerr.path_id = about.path_id;
  rerr.meta = about.meta;
  net.unicast(id_, rev->second.next_hop, rerr);
}

void Router::handle_data(Network& net, const Packet& data, NodeId from) {
  const bool mine = options_.pseudonymous ? fellows_.contains(data.forward_alias)
                                          : data.forward_alias == address_alias(id_);
  if (mine) {
    log_event(net, data, LogEvent::Received, from);
    if (delivered_.insert(data.packet_id).second) net.on_data_delivered(data);
    return;
  }

  if (is_attacking(net, AttackKind::BlackHole)) {
    net.on_data_dropped(data, DropCause::Attack);
    return;
  }
  if (is_attacking(net, AttackKind::PassiveDrop)) {
    std::bernoulli_distribution drop(attack_->param);
    if (drop(net.rng(id_))) {
      net.on_data_dropped(data, DropCause::Attack);
      return;
    }
  }

  log_event(net, data, LogEvent::Received, from);
  auto route = forward_.find({data.forward_alias, data.path_id});
  if (route == forward_.end()) {
    log_event(net, data, LogEvent::Dropped, from);
    net.on_data_dropped(data, DropCause::Loss);
    send_rerr(net, data);
    return;
  }
  net.unicast(id_, route->second.next_hop, data);
}

void Router::on_unicast_result(Network& net, const Packet& p, NodeId to, bool delivered) {
  if (p.kind == PacketKind::Rrep) {
    if (delivered && p.hop_count > 0) {
      auto route = forward_.find({p.forward_alias, p.path_id});
      log_event(net, p, LogEvent::Forwarded, route == forward_.end() ? to : route->second.next_hop);
    }
    return;
  }
  if (p.kind != PacketKind::Data) return;

  FlowState* flow = flow_by_aliases(p.reverse_alias, p.forward_alias);
  if (flow && flow->spec.source == id_) {
    if (delivered) {
      log_event(net, p, LogEvent::Forwarded, id_);
      if (options_.trust_layer) {
        auto ev = evidence_.find(p.path_id);
        if (ev != evidence_.end()) ev->second.data_entries.push_back(log_.size() - 1);
      }
      return;
    }
    // First hop broke before the packet left: salvage it onto another path.
    remove_path(net, *flow, p.path_id, false);
    send_on_paths(net, *flow, p);
    return;
  }

  auto rev = reverse_.find(p.reverse_alias);
  const NodeId upstream = rev == reverse_.end() ? to : rev->second.next_hop;
  if (delivered) {
    log_event(net, p, LogEvent::Forwarded, upstream);
  } else {
    log_event(net, p, LogEvent::Dropped, upstream);
    net.on_data_dropped(p, DropCause::Loss);
    send_rerr(net, p);
  }
}

std::vector<Router::AuditOutcome> Router::audit_flows(Network& net, double cutoff,
                                                      const void* ctx, LogLookup lookup) {
  std::vector<AuditOutcome> outcomes;
  if (!options_.trust_layer) return outcomes;

  const auto& entries = log_.entries();
  for (auto it = evidence_.begin(); it != evidence_.end();) {
    PathEvidence& ev = it->second;
    FlowState* flow = flow_by_aliases(ev.path.reverse_alias, ev.path.forward_alias);
    const bool live = flow && std::any_of(flow->paths.begin(), flow->paths.end(), [&](const Path& p) {
                        return p.path_id == ev.path.path_id;
                      });
    std::size_t upto = ev.audited_upto;
    while (upto < ev.data_entries.size() && entries[ev.data_entries[upto]].timestamp < cutoff) {
      ++upto;
    }
    // A route without intermediaries has nobody to localise.
    if (ev.path.relays.empty()) ev.audited_upto = ev.data_entries.size();
    if (upto == ev.audited_upto || ev.path.relays.empty()) {
      it = live ? std::next(it) : evidence_.erase(it);
      continue;
    }

    AuditOutcome outcome;
    outcome.flow_id = flow ? flow->spec.flow_id : 0;
    outcome.path = ev.path;
    outcome.tau_c.push_back(ev.rrep_entry);
    for (std::size_t i = ev.audited_upto; i < upto; ++i) outcome.tau_c.push_back(ev.data_entries[i]);
    std::vector<LogEntry> tau_c;
    for (std::size_t i : outcome.tau_c) tau_c.push_back(entries[i]);

    auto party_of = [&](NodeId n) {
      const NodeLog* l = lookup(ctx, n);
      AuditParty party = l ? publish(*l) : AuditParty{net.log_alias_of(n), nullptr, {}, 0};
      outcome.published.emplace_back(n, party.published_size);
      return party;
    };
    std::vector<AuditParty> route;
    std::vector<Pseudonym> aliases;
    for (NodeId r : ev.path.relays) {
      route.push_back(party_of(r));
      aliases.push_back(net.log_alias_of(r));
    }
    const AuditParty dest = party_of(ev.destination);
    const RuleBook rules = standard_rules(log_.alias(), aliases, dest.alias, tau_c);
    const auto tau_d = collect_destination_evidence(dest, tau_c);
    outcome.report = audit_route(route, dest, tau_c, tau_d, rules);

    if (outcome.report.active && !outcome.report.active->target) {
      outcome.accused.push_back(ev.path.relays.at(outcome.report.active->attacker_position - 1));
    }
    for (std::size_t pos : outcome.report.passive) {
      outcome.accused.push_back(ev.path.relays.at(pos - 1));
    }
    const std::size_t n = ev.path.relays.size();
    outcome.messages = 2 * (n + 1);
    ev.audited_upto = upto;
    for (NodeId a : outcome.accused) flag(net, a);
    outcomes.push_back(std::move(outcome));
    ++it;
  }

  for (auto& [_, flow] : flows_) {
    std::vector<std::uint64_t> tainted;
    for (const auto& p : flow.paths) {
      if (suspects_.contains(p.next_hop) ||
          std::any_of(p.relays.begin(), p.relays.end(),
                      [&](NodeId r) { return suspects_.contains(r); })) {
        tainted.push_back(p.path_id);
      }
    }
    for (auto id : tainted) remove_path(net, flow, id, true);
  }
  return outcomes;
}

}  // namespace tap3
