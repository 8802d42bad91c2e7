#include <algorithm>
#include <set>
#include <vector>

#include "doctest.h"
#include "tap3/routing.hpp"

using namespace tap3;

namespace {

Path path(std::uint64_t id, std::vector<NodeId> relays, double at, std::int64_t dseq) {
  Path p;
  p.path_id = id;
  p.relays = std::move(relays);
  p.next_hop = p.relays.empty() ? 99 : p.relays.front();
  p.hop_count = static_cast<std::uint32_t>(p.relays.size() + 1);
  p.discovered_at = at;
  p.dseq = dseq;
  return p;
}

std::vector<std::uint64_t> ids(const std::vector<Path>& ps) {
  std::vector<std::uint64_t> out;
  for (const auto& p : ps) out.push_back(p.path_id);
  return out;
}

}  // namespace

TEST_CASE("protocol options") {
  const auto t = RouterOptions::for_protocol(ProtocolKind::TAP3);
  const auto s = RouterOptions::for_protocol(ProtocolKind::S_MPRF);
  const auto m = RouterOptions::for_protocol(ProtocolKind::MPRF);
  CHECK(t.trust_layer);
  CHECK(t.rotate_aliases);
  CHECK(t.pseudonymous);
  CHECK(t.authenticate);
  CHECK_FALSE(s.trust_layer);
  CHECK(s.pseudonymous);
  CHECK(s.authenticate);
  CHECK_FALSE(m.trust_layer);
  CHECK_FALSE(m.pseudonymous);
  CHECK_FALSE(m.authenticate);
  CHECK(std::string(to_string(ProtocolKind::S_MPRF)) == "smprf");
  CHECK(parse_protocol("MPRF") == ProtocolKind::MPRF);
  CHECK_FALSE(parse_protocol("aodv"));
  CHECK(parse_attack("seqinflation") == AttackKind::SeqInflation);
}

TEST_CASE("TAP3 path selection skips suspects and prefers short, early paths") {
  const std::vector<Path> found{path(1, {4, 5}, 1.0, 30), path(2, {6}, 2.0, 10),
                                path(3, {7}, 1.5, 1000), path(4, {8, 9}, 0.5, 20)};
  CHECK(ids(select_paths(ProtocolKind::TAP3, found, {})) == std::vector<std::uint64_t>{3, 2, 4, 1});
  CHECK(ids(select_paths(ProtocolKind::TAP3, found, {7, 5})) == std::vector<std::uint64_t>{2, 4});
  CHECK_THROWS_AS(select_paths(ProtocolKind::TAP3, found, {6, 7, 8, 4}), RouteError);
  CHECK_THROWS_AS(select_paths(ProtocolKind::TAP3, {}, {}), RouteError);
}

TEST_CASE("baseline path selection trusts the freshest sequence number") {
  const std::vector<Path> found{path(1, {4, 5}, 1.0, 30), path(2, {6}, 2.0, 10),
                                path(3, {7}, 1.5, 1000), path(4, {8}, 0.5, 30)};
  for (auto p : {ProtocolKind::S_MPRF, ProtocolKind::MPRF}) {
    CHECK(ids(select_paths(p, found, {7})) == std::vector<std::uint64_t>{3, 4, 1, 2});
  }
}

TEST_CASE("TAP3 spreads data over the minimum-hop paths only") {
  const std::vector<Path> usable{path(1, {4}, 0, 0), path(2, {5}, 1, 0), path(3, {6, 7}, 2, 0)};
  std::uint64_t cursor = 0;
  std::vector<std::size_t> picks;
  for (int i = 0; i < 6; ++i) picks.push_back(assign_path(ProtocolKind::TAP3, usable, cursor));
  CHECK(picks == std::vector<std::size_t>{0, 1, 0, 1, 0, 1});
  cursor = 0;
  for (int i = 0; i < 4; ++i) CHECK(assign_path(ProtocolKind::MPRF, usable, cursor) == 0);
}

TEST_CASE("reply authentication covers aliases and route record but not sequence numbers") {
  Packet rrep;
  rrep.kind = PacketKind::Rrep;
  rrep.rreq_id = 12;
  rrep.forward_alias = address_alias(3);
  rrep.reverse_alias = address_alias(4);
  rrep.route_record = {5, 6};
  rrep.dseq = 7;
  const auto base = reply_auth_message(rrep);

  Packet seq = rrep;
  seq.dseq = 9999;
  seq.sseq = 4;
  CHECK(reply_auth_message(seq) == base);

  Packet rec = rrep;
  rec.route_record = {5, 8};
  CHECK(reply_auth_message(rec) != base);
  Packet req = rrep;
  req.rreq_id = 13;
  CHECK(reply_auth_message(req) != base);
  Packet al = rrep;
  al.forward_alias = address_alias(9);
  CHECK(reply_auth_message(al) != base);
}

TEST_CASE("wire sizes") {
  Packet data;
  data.kind = PacketKind::Data;
  data.payload_size = 256;
  CHECK(wire_size(data) == 256);
  Packet rreq;
  rreq.kind = PacketKind::Rreq;
  CHECK(wire_size(rreq) == header_bytes(rreq).size());
  Packet longer = rreq;
  longer.route_record = {1, 2, 3};
  CHECK(wire_size(longer) > wire_size(rreq));
}

TEST_CASE("address aliases carry the id in plain view") {
  const auto a = address_alias(0x01020304);
  const auto be = encode_be64(0x01020304);
  CHECK(std::equal(be.begin(), be.end(), a.digest.begin()));
  CHECK(address_alias(1) != address_alias(2));
}
