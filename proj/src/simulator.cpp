#include "tap3/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <queue>

#include "tap3/mobility.hpp"

namespace tap3 {

std::optional<double> link_delay(double distance, std::uint32_t bytes, double range,
                                 const SimParams& params) {
  if (distance > range) return std::nullopt;
  return static_cast<double>(bytes) * 8.0 / params.link_rate_bps +
         distance / params.propagation_speed;
}

std::size_t identity_leaks(const Packet& p, NodeId id) {
  const auto enc = encode_be64(id);
  std::size_t hits = 0;
  for (const Pseudonym* alias : {&p.forward_alias, &p.reverse_alias}) {
    const auto& d = alias->digest;
    for (std::size_t i = 0; i + enc.size() <= d.size(); ++i) {
      if (std::equal(enc.begin(), enc.end(), d.begin() + static_cast<std::ptrdiff_t>(i))) ++hits;
    }
  }
  hits += static_cast<std::size_t>(std::count(p.route_record.begin(), p.route_record.end(), id));
  return hits;
}

std::string trace_csv_header() { return "time_s,from,to,kind,packet_id,bytes,header_hex"; }

namespace {

enum class EventKind : std::uint8_t { Arrival, TxDone, Enqueue, Timer, AppSend, Audit };

struct Event {
  double time;
  std::uint64_t seq;
  EventKind kind;
  NodeId node;
  NodeId peer;
  std::uint64_t a;
  std::uint64_t b;
  std::uint32_t slot;
};

struct Later {
  bool operator()(const Event& x, const Event& y) const {
    if (x.time != y.time) return x.time > y.time;
    return x.seq > y.seq;
  }
};

constexpr NodeId kBroadcast = 0xffffffffu;
constexpr std::uint32_t kNoSlot = 0xffffffffu;

struct Outgoing {
  std::uint32_t slot;
  NodeId to;
};

std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t node, std::uint32_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    node, purpose};
  return std::mt19937_64(seq);
}

enum Purpose : std::uint32_t { kMobility = 1, kProtocol = 2, kFlows = 3 };

class Engine final : public Network {
 public:
  Engine(const ScenarioConfig& config, const RunOptions& options);
  RunResult run();

  double now() const override { return now_; }
  void broadcast(NodeId from, Packet packet, double jitter) override;
  void unicast(NodeId from, NodeId to, Packet packet) override;
  void start_discovery_timer(NodeId node, std::uint64_t flow_id, std::uint64_t attempt,
                             double delay) override {
    schedule(now_ + delay, EventKind::Timer, node, 0, flow_id, attempt, kNoSlot);
  }
  std::uint64_t next_packet_id() override { return next_packet_id_++; }
  std::mt19937_64& rng(NodeId node) override { return node_rng_.at(node); }
  bool attacks_active() const override { return now_ >= training_end_; }
  bool training_phase() const override { return now_ < training_end_; }
  double monitor_epoch() const override { return training_end_; }
  const Pseudonym& log_alias_of(NodeId node) const override { return log_aliases_.at(node); }

  void on_data_delivered(const Packet& p) override;
  void on_data_dropped(const Packet& p, DropCause cause) override;
  void on_verdict(NodeId node, const SeqVector& v, const Verdict& verdict, double threshold,
                  double forged_delta) override;
  void on_flag(NodeId flagger, NodeId suspect) override;
  void on_discovery_complete(NodeId, std::uint64_t, double elapsed) override {
    result_.discovery_latencies.push_back(elapsed);
  }

 private:
  static const NodeLog* lookup_log(const void* ctx, NodeId node);

  std::uint32_t store(Packet p);
  void release(std::uint32_t slot);
  void schedule(double t, EventKind kind, NodeId node, NodeId peer, std::uint64_t a,
                std::uint64_t b, std::uint32_t slot);
  void enqueue(NodeId node, std::uint32_t slot, NodeId to);
  void start_tx(NodeId node);
  void on_tx_done(NodeId node);
  void on_arrival(const Event& e);
  void on_app_send(const Event& e);
  void on_audit();
  std::pair<double, double> position(NodeId n);
  double distance(NodeId a, NodeId b);
  void trace(NodeId from, NodeId to, const Packet& p, std::uint32_t bytes);
  void finish();

  ScenarioConfig cfg_;
  RunOptions opt_;
  MobilityParams mob_;
  double now_ = 0;
  double training_end_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t next_packet_id_ = 1;

  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::vector<Packet> pool_;
  std::vector<std::uint32_t> free_;

  std::vector<Router> routers_;
  std::vector<MobilityState> mobility_;
  std::vector<std::mt19937_64> mob_rng_;
  std::vector<std::mt19937_64> node_rng_;
  std::vector<std::deque<Outgoing>> txq_;
  std::vector<char> busy_;
  std::vector<Pseudonym> log_aliases_;
  std::vector<std::optional<AttackKind>> attack_of_;
  std::vector<std::pair<double, double>> delays_;
  RunResult result_;
};

Engine::Engine(const ScenarioConfig& config, const RunOptions& options)
    : cfg_(config), opt_(options) {
  const std::uint32_t n = cfg_.node_count;
  mob_ = MobilityParams{cfg_.area_width, cfg_.area_height, cfg_.max_speed, cfg_.pause_time};
  training_end_ = opt_.params.training_fraction * cfg_.sim_duration;
  result_.config = cfg_;

  const auto& fixed = opt_.overrides.positions;
  if (fixed && fixed->size() != n) throw ConfigError("position override does not match node_count");
  if (fixed) mob_.max_speed = 0;

  attack_of_.assign(n, std::nullopt);
  for (const auto& a : cfg_.attackers) attack_of_[a.node] = a.kind;

  const RouterOptions ropt = RouterOptions::for_protocol(cfg_.protocol);
  std::vector<MasterKey> masters;
  masters.reserve(n);
  routers_.reserve(n);
  for (NodeId i = 0; i < n; ++i) {
    masters.push_back(MasterKey::from_seed(cfg_.rng_seed, i));
    routers_.emplace_back(i, masters.back(), ropt);
    mob_rng_.push_back(make_rng(cfg_.rng_seed, i, kMobility));
    node_rng_.push_back(make_rng(cfg_.rng_seed, i, kProtocol));
    MobilityState s = random_waypoint_init(mob_, mob_rng_.back());
    if (fixed) {
      s = MobilityState{};
      s.x = (*fixed)[i].first;
      s.y = (*fixed)[i].second;
    }
    mobility_.push_back(s);
    log_aliases_.push_back(routers_.back().log_alias());
  }
  for (const auto& a : cfg_.attackers) routers_[a.node].set_attack(a);
  txq_.resize(n);
  busy_.assign(n, 0);

  if (ropt.pseudonymous) {
    for (NodeId d = 0; d < n; ++d) {
      for (NodeId s = 0; s < n; ++s) {
        if (s == d) continue;
        routers_[s].install_sender_key(derive_pairwise_key(masters[d], d, s));
        routers_[d].install_trapdoor_for(s);
      }
    }
  }

  std::vector<FlowSpec> flows;
  auto flow_rng = make_rng(cfg_.rng_seed, 0, kFlows);
  if (opt_.overrides.flows) {
    flows = *opt_.overrides.flows;
  } else {
    std::vector<NodeId> honest;
    for (NodeId i = 0; i < n; ++i) {
      if (!attack_of_[i]) honest.push_back(i);
    }
    std::shuffle(honest.begin(), honest.end(), flow_rng);
    for (std::uint32_t f = 0; f < cfg_.flows; ++f) {
      flows.push_back(FlowSpec{f, honest[2 * f], honest[2 * f + 1]});
    }
  }
  std::uniform_real_distribution<double> start(
      0.0, std::min(opt_.params.flow_start_window, cfg_.sim_duration));
  for (const auto& f : flows) {
    if (f.source >= n || f.destination >= n || f.source == f.destination) {
      throw ConfigError("flow endpoints out of range");
    }
    if (f.flow_id != result_.flows.size()) throw ConfigError("flow ids must be 0..F-1");
    routers_[f.source].add_flow(f);
    result_.flows.push_back(FlowCounters{f});
    schedule(start(flow_rng), EventKind::AppSend, f.source, 0, f.flow_id, 0, kNoSlot);
  }

  const double audit_every =
      opt_.params.audit_interval > 0 ? opt_.params.audit_interval : training_end_;
  if (cfg_.protocol == ProtocolKind::TAP3 && audit_every > 0) {
    for (double t = training_end_ + audit_every; t < cfg_.sim_duration; t += audit_every) {
      schedule(t, EventKind::Audit, 0, 0, 0, 0, kNoSlot);
    }
  }
}

const NodeLog* Engine::lookup_log(const void* ctx, NodeId node) {
  const auto* e = static_cast<const Engine*>(ctx);
  return node < e->routers_.size() ? &e->routers_[node].log() : nullptr;
}

std::uint32_t Engine::store(Packet p) {
  if (!free_.empty()) {
    const std::uint32_t slot = free_.back();
    free_.pop_back();
    pool_[slot] = std::move(p);
    return slot;
  }
  pool_.push_back(std::move(p));
  return static_cast<std::uint32_t>(pool_.size() - 1);
}

void Engine::release(std::uint32_t slot) { free_.push_back(slot); }

void Engine::schedule(double t, EventKind kind, NodeId node, NodeId peer, std::uint64_t a,
                      std::uint64_t b, std::uint32_t slot) {
  queue_.push(Event{t, seq_++, kind, node, peer, a, b, slot});
}

std::pair<double, double> Engine::position(NodeId n) {
  auto& s = mobility_[n];
  s = random_waypoint_step(s, now_, mob_, mob_rng_[n]);
  if (s.x < 0 || s.x > cfg_.area_width || s.y < 0 || s.y > cfg_.area_height) {
    result_.positions_contained = false;
  }
  return {s.x, s.y};
}

double Engine::distance(NodeId a, NodeId b) {
  const auto [ax, ay] = position(a);
  const auto [bx, by] = position(b);
  return std::hypot(ax - bx, ay - by);
}

void Engine::broadcast(NodeId from, Packet packet, double jitter) {
  const std::uint32_t slot = store(std::move(packet));
  if (jitter > 0) {
    schedule(now_ + jitter, EventKind::Enqueue, from, kBroadcast, 0, 0, slot);
  } else {
    enqueue(from, slot, kBroadcast);
  }
}

void Engine::unicast(NodeId from, NodeId to, Packet packet) {
  enqueue(from, store(std::move(packet)), to);
}

void Engine::enqueue(NodeId node, std::uint32_t slot, NodeId to) {
  txq_[node].push_back(Outgoing{slot, to});
  if (!busy_[node]) start_tx(node);
}

void Engine::start_tx(NodeId node) {
  busy_[node] = 1;
  const Packet& p = pool_[txq_[node].front().slot];
  const double duration = static_cast<double>(wire_size(p)) * 8.0 / opt_.params.link_rate_bps;
  schedule(now_ + duration, EventKind::TxDone, node, 0, 0, 0, kNoSlot);
}

void Engine::trace(NodeId from, NodeId to, const Packet& p, std::uint32_t bytes) {
  if (!opt_.record_trace) return;
  std::string header;
  if (p.kind == PacketKind::Rreq || p.kind == PacketKind::Rrep) header = to_hex(header_bytes(p));
  char buf[160];
  char dest[16];
  if (to == kBroadcast) {
    std::snprintf(dest, sizeof dest, "*");
  } else {
    std::snprintf(dest, sizeof dest, "%u", to);
  }
  std::snprintf(buf, sizeof buf, "%.9f,%u,%s,%s,%llu,%u,", now_, from, dest, to_string(p.kind),
                static_cast<unsigned long long>(p.packet_id), bytes);
  result_.trace_rows.push_back(buf + header);
}

void Engine::on_tx_done(NodeId node) {
  const Outgoing out = txq_[node].front();
  txq_[node].pop_front();
  const Packet p = pool_[out.slot];
  release(out.slot);
  const std::uint32_t bytes = wire_size(p);

  ++result_.tx_by_kind[static_cast<std::size_t>(p.kind)];
  if (counts_as_overhead(p.kind)) ++result_.control_tx;
  if (!is_control(p.kind)) ++result_.data_tx;
  if (p.kind == PacketKind::Rreq || p.kind == PacketKind::Rrep) {
    if (p.meta.flow_id < result_.flows.size()) {
      const auto& spec = result_.flows[p.meta.flow_id].spec;
      result_.privacy_leaks += identity_leaks(p, spec.source) + identity_leaks(p, spec.destination);
    }
  }
  trace(node, out.to, p, bytes);

  if (out.to == kBroadcast) {
    for (NodeId j = 0; j < routers_.size(); ++j) {
      if (j == node) continue;
      const double d = distance(node, j);
      if (d <= cfg_.radio_range) {
        schedule(now_ + d / opt_.params.propagation_speed, EventKind::Arrival, j, node, 0, 0,
                 store(p));
      }
    }
  } else {
    const double d = distance(node, out.to);
    const bool ok = d <= cfg_.radio_range;
    if (ok) {
      schedule(now_ + d / opt_.params.propagation_speed, EventKind::Arrival, out.to, node, 0, 0,
               store(p));
    }
    routers_[node].on_unicast_result(*this, p, out.to, ok);
  }

  if (!txq_[node].empty()) {
    start_tx(node);
  } else {
    busy_[node] = 0;
  }
}

void Engine::on_arrival(const Event& e) {
  const Packet p = std::move(pool_[e.slot]);
  release(e.slot);
  Router& r = routers_[e.node];
  switch (p.kind) {
    case PacketKind::Rreq: r.handle_rreq(*this, p, e.peer); break;
    case PacketKind::Rrep: r.handle_rrep(*this, p, e.peer); break;
    case PacketKind::RrepAck: r.handle_rrep_ack(*this, p, e.peer); break;
    case PacketKind::Rerr: r.handle_rerr(*this, p, e.peer); break;
    case PacketKind::Data: r.handle_data(*this, p, e.peer); break;
    case PacketKind::Audit: break;
  }
}

void Engine::on_app_send(const Event& e) {
  auto& counters = result_.flows.at(e.a);
  ++counters.sent;
  routers_[e.node].app_send(*this, e.a, cfg_.pkt_size);
  const double next = now_ + 1.0 / cfg_.pkt_rate;
  if (next < cfg_.sim_duration) {
    schedule(next, EventKind::AppSend, e.node, 0, e.a, 0, kNoSlot);
  }
}

void Engine::on_audit() {
  const double cutoff = now_ - opt_.params.audit_grace;
  for (const auto& fc : result_.flows) {
    Router& src = routers_[fc.spec.source];
    auto outcomes = src.audit_flows(*this, cutoff, this, &Engine::lookup_log);
    for (auto& o : outcomes) {
      result_.control_tx += o.messages;
      result_.tx_by_kind[static_cast<std::size_t>(PacketKind::Audit)] += o.messages;
      if (!opt_.record_trace) continue;
      Packet msg;
      msg.kind = PacketKind::Audit;
      std::vector<NodeId> hops{fc.spec.source};
      hops.insert(hops.end(), o.path.relays.begin(), o.path.relays.end());
      hops.push_back(fc.spec.destination);
      // Request walks the route collecting disclosures, reply carries them back.
      for (std::size_t h = 1; h < hops.size(); ++h) trace(hops[h - 1], hops[h], msg, 0);
      for (std::size_t h = hops.size() - 1; h >= 1; --h) trace(hops[h], hops[h - 1], msg, 0);

      result_.report_rows.push_back(audit_report_row(o.flow_id, o.report));
      AuditRecord rec;
      rec.time = now_;
      rec.source = fc.spec.source;
      rec.flow_id = o.flow_id;
      rec.relays = o.path.relays;
      rec.destination = fc.spec.destination;
      rec.tau_c = o.tau_c;
      rec.published = o.published;
      rec.report = o.report;
      result_.audits.push_back(std::move(rec));
    }
  }
}

void Engine::on_data_delivered(const Packet& p) {
  auto& c = result_.flows.at(p.meta.flow_id);
  ++c.delivered;
  delays_.emplace_back(p.meta.created_at, now_);
}

void Engine::on_data_dropped(const Packet& p, DropCause cause) {
  auto& c = result_.flows.at(p.meta.flow_id);
  if (cause == DropCause::Attack) {
    ++c.attacked;
  } else {
    ++c.lost;
  }
}

void Engine::on_verdict(NodeId node, const SeqVector& v, const Verdict& verdict,
                        double threshold, double forged_delta) {
  if (attack_of_[node]) return;
  const bool flagged = verdict.label == Label::Malicious;
  ++result_.verdicts;
  if (flagged) ++result_.malicious_verdicts;
  auto& score = result_.detector;
  if (forged_delta > 0) {
    ++score.forged;
    score.forged_flagged += flagged;
    if (forged_delta >= 3 * std::sqrt(threshold)) {
      ++score.strong;
      score.strong_flagged += flagged;
    }
  } else {
    ++score.clean;
    score.clean_flagged += flagged;
  }
  if (opt_.record_trace) result_.verdict_rows.push_back(verdict_csv_row(node, v, verdict, threshold));
}

void Engine::on_flag(NodeId flagger, NodeId suspect) {
  if (!attack_of_[flagger]) result_.flagged.insert(suspect);
}

void Engine::finish() {
  // Whatever is still queued, buffered or on the air is in flight.
  auto count_slot = [&](std::uint32_t slot) {
    const Packet& p = pool_[slot];
    if (p.kind == PacketKind::Data) ++result_.flows.at(p.meta.flow_id).in_flight;
  };
  for (const auto& q : txq_) {
    for (const auto& o : q) count_slot(o.slot);
  }
  while (!queue_.empty()) {
    const Event e = queue_.top();
    queue_.pop();
    if (e.slot != kNoSlot) count_slot(e.slot);
  }
  std::uint64_t sent = 0, delivered = 0;
  for (auto& c : result_.flows) {
    c.in_flight += routers_[c.spec.source].buffered(c.spec.flow_id);
    if (c.sent != c.delivered + c.lost + c.attacked + c.in_flight) {
      throw AccountingError("packet conservation violated for flow " +
                            std::to_string(c.spec.flow_id));
    }
    sent += c.sent;
    delivered += c.delivered;
  }

  MetricsReport& m = result_.metrics;
  m.protocol = cfg_.protocol;
  m.pause_time = cfg_.pause_time;
  m.seed = std::to_string(cfg_.rng_seed);
  m.pdr = compute_pdr(delivered, sent);
  m.avg_delay = compute_avg_delay(delays_);
  m.overhead = compute_overhead(result_.control_tx, delivered);
  for (NodeId n : result_.flagged) {
    if (!attack_of_[n]) {
      m.false_positives += 1;
    } else if (*attack_of_[n] == AttackKind::PassiveDrop) {
      m.detected_passive += 1;
    } else {
      m.detected_active += 1;
    }
  }
  if (opt_.record_trace) {
    result_.logs.reserve(routers_.size());
    for (const auto& r : routers_) result_.logs.push_back(r.log());
  }
}

RunResult Engine::run() {
  while (!queue_.empty()) {
    const Event e = queue_.top();
    if (e.time > cfg_.sim_duration) break;
    queue_.pop();
    now_ = e.time;
    ++result_.events;
    switch (e.kind) {
      case EventKind::Arrival: on_arrival(e); break;
      case EventKind::TxDone: on_tx_done(e.node); break;
      case EventKind::Enqueue: enqueue(e.node, e.slot, e.peer); break;
      case EventKind::Timer: routers_[e.node].on_discovery_timeout(*this, e.a, e.b); break;
      case EventKind::AppSend: on_app_send(e); break;
      case EventKind::Audit: on_audit(); break;
    }
  }
  finish();
  return std::move(result_);
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& config, const RunOptions& options) {
  validate(config);
  Engine engine(config, options);
  return engine.run();
}

}  // namespace tap3
