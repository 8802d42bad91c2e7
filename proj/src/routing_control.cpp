// Route discovery: request flooding, destination replies, reply relaying and
// acceptance at the source.

#include <algorithm>
#include <cmath>

#include "tap3/routing.hpp"

namespace tap3 {

Packet Router::originate_route_request(Network& net, std::uint64_t flow_id) {
  auto it = flows_.find(flow_id);
  if (it == flows_.end()) throw ConfigError("unknown flow");
  FlowState& flow = it->second;

  Packet rreq;
  rreq.kind = PacketKind::Rreq;
  rreq.packet_id = net.next_packet_id();
  if (options_.pseudonymous) {
    if (options_.rotate_aliases && flow.rounds > 0) {
      flow.ps->advance();
      flow.pd->advance();
    }
    rreq.forward_alias = flow.pd->current();
    rreq.reverse_alias = flow.ps->current();
  } else {
    rreq.forward_alias = address_alias(flow.spec.destination);
    rreq.reverse_alias = address_alias(id_);
  }
  ++flow.rounds;
  rreq.sseq = ++flow.next_sseq;
  rreq.oseq = ++own_seq_;
  rreq.dseq = flow.known_dseq;
  rreq.meta.flow_id = flow_id;
  rreq.meta.created_at = net.now();

  flow.outstanding[rreq.packet_id] = RreqInfo{rreq.sseq, rreq.oseq, rreq.dseq};
  alias_flows_[{rreq.reverse_alias, rreq.forward_alias}] = flow_id;
  seen_rreq_.insert({rreq.oseq, rreq.reverse_alias});
  net.broadcast(id_, rreq, 0.0);
  return rreq;
}

void Router::start_discovery(Network& net, FlowState& flow) {
  if (flow.discovering) return;
  flow.discovering = true;
  flow.attempt = 0;
  flow.discovery_started = net.now();
  originate_route_request(net, flow.spec.flow_id);
  net.start_discovery_timer(id_, flow.spec.flow_id, flow.attempt,
                            options_.discovery_backoff_start);
}

void Router::on_discovery_timeout(Network& net, std::uint64_t flow_id, std::uint64_t attempt) {
  auto it = flows_.find(flow_id);
  if (it == flows_.end()) return;
  FlowState& flow = it->second;
  if (!flow.discovering || attempt != flow.attempt) return;
  if (!flow.paths.empty()) {
    flow.discovering = false;
    return;
  }
  ++flow.attempt;
  originate_route_request(net, flow_id);
  const double delay = std::min(options_.discovery_backoff_start *
                                    std::ldexp(1.0, static_cast<int>(std::min<std::uint64_t>(flow.attempt, 30))),
                                options_.discovery_backoff_cap);
  net.start_discovery_timer(id_, flow_id, flow.attempt, delay);
}

RreqAction Router::handle_rreq(Network& net, const Packet& rreq, NodeId from) {
  if (options_.trust_layer && suspects_.contains(from)) return RreqAction::Discard;

  // Destination side.
  std::optional<FellowEntry> fellow;
  if (options_.pseudonymous) {
    auto cached = fellows_.find(rreq.forward_alias);
    if (cached != fellows_.end()) {
      fellow = cached->second;
    } else if (auto m = trapdoor_.check_and_refill(rreq.forward_alias)) {
      fellow = FellowEntry{m->peer, derive_pairwise_key(master_, id_, m->peer)};
      fellows_[rreq.forward_alias] = *fellow;
    }
  } else if (rreq.forward_alias == address_alias(id_)) {
    fellow = FellowEntry{0, PairwiseKey{}};
  }

  if (fellow) {
    auto& state = replies_[{rreq.reverse_alias, rreq.oseq}];
    if (state.records.size() >= options_.max_paths) return RreqAction::Discard;
    for (const auto& prior : state.records) {
      for (NodeId n : rreq.route_record) {
        if (std::find(prior.begin(), prior.end(), n) != prior.end()) return RreqAction::Discard;
      }
      if (prior.empty() || rreq.route_record.empty()) return RreqAction::Discard;
    }
    state.records.push_back(rreq.route_record);

    dest_seq_ = std::max(dest_seq_, rreq.dseq + 1);
    Packet rrep;
    rrep.kind = PacketKind::Rrep;
    rrep.packet_id = net.next_packet_id();
    rrep.path_id = rrep.packet_id;
    rrep.rreq_id = rreq.packet_id;
    rrep.forward_alias = rreq.forward_alias;
    rrep.reverse_alias = rreq.reverse_alias;
    rrep.sseq = rreq.sseq;
    rrep.oseq = rreq.oseq;
    rrep.dseq = dest_seq_;
    rrep.route_record = rreq.route_record;
    rrep.meta = rreq.meta;
    if (options_.authenticate) rrep.tag = reply_tag(fellow->key, rrep);
    log_event(net, rrep, LogEvent::Replied, from);
    net.unicast(id_, from, rrep);
    return RreqAction::Reply;
  }

  // Relay side.
  if (!seen_rreq_.insert({rreq.oseq, rreq.reverse_alias}).second) return RreqAction::Discard;
  if (rreq.hop_count + 1 >= options_.hop_limit) return RreqAction::Discard;
  if (std::find(rreq.route_record.begin(), rreq.route_record.end(), id_) !=
      rreq.route_record.end()) {
    return RreqAction::Discard;
  }

  reverse_[rreq.reverse_alias] =
      ReverseEntry{from, RreqInfo{rreq.sseq, rreq.oseq, rreq.dseq}, rreq.packet_id, net.now()};

  Packet fwd = rreq;
  fwd.hop_count += 1;
  fwd.route_record.push_back(id_);

  if (is_attacking(net, AttackKind::BlackHole)) {
    // Claims a fresh route of its own and answers at once.
    Packet forged;
    forged.kind = PacketKind::Rrep;
    forged.packet_id = net.next_packet_id();
    forged.path_id = forged.packet_id;
    forged.rreq_id = rreq.packet_id;
    forged.forward_alias = rreq.forward_alias;
    forged.reverse_alias = rreq.reverse_alias;
    forged.sseq = rreq.sseq;
    forged.oseq = rreq.oseq;
    forged.dseq = rreq.dseq + static_cast<std::int64_t>(attack_->param);
    forged.route_record = fwd.route_record;
    forged.meta = rreq.meta;
    forged.meta.forged_delta = attack_->param;
    for (auto& b : forged.tag) b = static_cast<std::uint8_t>(net.rng(id_)());
    net.unicast(id_, from, forged);
    net.broadcast(id_, fwd, 0.0);
    return RreqAction::Forward;
  }

  std::uniform_real_distribution<double> jitter(0.0, options_.rebroadcast_jitter);
  net.broadcast(id_, fwd, jitter(net.rng(id_)));
  return RreqAction::Forward;
}

RrepAction Router::handle_rrep(Network& net, const Packet& rrep, NodeId from) {
  if (options_.trust_layer && suspects_.contains(from)) return RrepAction::Discard;

  if (FlowState* flow = flow_by_aliases(rrep.reverse_alias, rrep.forward_alias)) {
    auto out = flow->outstanding.find(rrep.rreq_id);
    if (out == flow->outstanding.end()) return RrepAction::Discard;
    if (options_.authenticate &&
        !verify_hmac(flow->key, reply_auth_message(rrep), rrep.tag)) {
      return RrepAction::Discard;
    }
    const RreqInfo& info = out->second;
    SeqVector v{static_cast<double>(rrep.sseq - info.sseq),
                static_cast<double>(rrep.oseq - info.oseq),
                static_cast<double>(rrep.dseq - info.dseq)};
    if (auto verdict = monitor(net, v, rrep.meta.forged_delta); verdict && verdict->label == Label::Malicious) {
      flag(net, from);
      return RrepAction::Flag;
    }

    Path path;
    path.path_id = rrep.path_id;
    path.next_hop = from;
    path.relays = rrep.route_record;
    path.hop_count = static_cast<std::uint32_t>(path.relays.size() + 1);
    path.discovered_at = net.now();
    path.dseq = rrep.dseq;
    path.forward_alias = rrep.forward_alias;
    path.reverse_alias = rrep.reverse_alias;
    path.rrep_id = rrep.packet_id;
    if (options_.trust_layer &&
        (suspects_.contains(from) ||
         std::any_of(path.relays.begin(), path.relays.end(),
                     [&](NodeId r) { return suspects_.contains(r); }))) {
      return RrepAction::Discard;
    }
    if (flow->paths.size() >= options_.max_paths) return RrepAction::Discard;

    flow->known_dseq = std::max(flow->known_dseq, rrep.dseq);
    flow->paths.push_back(path);
    discovered_[flow->spec.flow_id].push_back(path);
    log_event(net, rrep, LogEvent::Received, from);
    if (options_.trust_layer) {
      PathEvidence ev;
      ev.path = path;
      ev.destination = flow->spec.destination;
      ev.rrep_entry = log_.size() - 1;
      evidence_[path.path_id] = std::move(ev);
    }

    Packet ack;
    ack.kind = PacketKind::RrepAck;
    ack.packet_id = net.next_packet_id();
    ack.rreq_id = rrep.rreq_id;
    ack.reverse_alias = rrep.reverse_alias;
    ack.forward_alias = rrep.forward_alias;
    ack.meta = rrep.meta;
    if (options_.authenticate) {
      auto id = encode_be64(ack.packet_id);
      ack.tag = hmac_tag(flow->key, id);
    }
    net.unicast(id_, from, ack);

    if (flow->discovering) {
      flow->discovering = false;
      net.on_discovery_complete(id_, flow->spec.flow_id, net.now() - flow->discovery_started);
    }
    flush_buffer(net, *flow);
    return RrepAction::Accept;
  }

  auto rev = reverse_.find(rrep.reverse_alias);
  if (rev == reverse_.end()) return RrepAction::Discard;
  const RreqInfo& info = rev->second.info;
  SeqVector v{static_cast<double>(rrep.sseq - info.sseq),
              static_cast<double>(rrep.oseq - info.oseq),
              static_cast<double>(rrep.dseq - info.dseq)};
  if (auto verdict = monitor(net, v, rrep.meta.forged_delta); verdict && verdict->label == Label::Malicious) {
    flag(net, from);
    return RrepAction::Flag;
  }

  log_event(net, rrep, LogEvent::Received, from);
  forward_[{rrep.forward_alias, rrep.path_id}] =
      RouteEntry{rrep.forward_alias, from, rrep.path_id, Trust::Normal, net.now()};

  Packet fwd = rrep;
  fwd.hop_count += 1;
  if (is_attacking(net, AttackKind::SeqInflation) || is_attacking(net, AttackKind::BlackHole)) {
    fwd.dseq += static_cast<std::int64_t>(attack_->param);
    fwd.meta.forged_delta += attack_->param;
  }
  net.unicast(id_, rev->second.next_hop, fwd);
  return RrepAction::Forward;
}

void Router::handle_rrep_ack(Network&, const Packet&, NodeId) {}

void Router::handle_rerr(Network& net, const Packet& rerr, NodeId from) {
  if (FlowState* flow = flow_by_aliases(rerr.reverse_alias, rerr.forward_alias)) {
    auto hit = std::find_if(flow->paths.begin(), flow->paths.end(),
                            [&](const Path& p) { return p.path_id == rerr.path_id; });
    if (hit != flow->paths.end() && hit->next_hop == from) {
      remove_path(net, *flow, rerr.path_id, true);
    }
    return;
  }
  auto rev = reverse_.find(rerr.reverse_alias);
  if (rev == reverse_.end()) return;
  net.unicast(id_, rev->second.next_hop, rerr);
}

}  // namespace tap3
