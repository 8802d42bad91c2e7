#include <random>
#include <vector>

#include "doctest.h"
#include "route_fixture.hpp"
#include "tap3/log_audit.hpp"
#include "tap3/merkle.hpp"

using namespace tap3;
using tap3::testing::flip_bit;
using tap3::testing::kFlippableBits;

namespace {

Digest tagged(std::uint8_t tag, std::span<const std::uint8_t> a, std::span<const std::uint8_t> b = {}) {
  std::vector<std::uint8_t> buf{tag};
  buf.insert(buf.end(), a.begin(), a.end());
  buf.insert(buf.end(), b.begin(), b.end());
  return sha256(buf);
}

// Straight level-by-level reference: pair up, promote the odd one out.
Digest reference_root(std::vector<Digest> level) {
  if (level.empty()) {
    const std::uint8_t two = 0x02;
    return sha256(std::span<const std::uint8_t>(&two, 1));
  }
  while (level.size() > 1) {
    std::vector<Digest> up;
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) up.push_back(tagged(0x01, level[i], level[i + 1]));
    if (level.size() % 2) up.push_back(level.back());
    level = std::move(up);
  }
  return level[0];
}

Digest random_leaf(std::mt19937_64& rng) {
  std::vector<std::uint8_t> data(1 + rng() % 40);
  for (auto& b : data) b = static_cast<std::uint8_t>(rng());
  return merkle_leaf_hash(data);
}

Pseudonym alias(std::uint64_t n) { return Pseudonym{sha256(encode_be64(n))}; }

LogEntry random_entry(std::mt19937_64& rng, std::uint64_t pid, double t) {
  LogEntry e;
  e.node_alias = alias(1);
  e.packet_id = pid;
  e.event = static_cast<LogEvent>(1 + rng() % 4);
  e.sseq = static_cast<std::int64_t>(rng() % 1000);
  e.oseq = static_cast<std::int64_t>(rng() % 1000);
  e.dseq = static_cast<std::int64_t>(rng() % 1000);
  e.prev_hop_alias = alias(rng() % 30);
  e.timestamp = t;
  return e;
}

}  // namespace

TEST_CASE("leaf and interior hashes are domain separated") {
  const std::uint8_t data[3] = {1, 2, 3};
  CHECK(merkle_leaf_hash(data) == tagged(0x00, data));
  const Digest a = merkle_leaf_hash(data);
  const Digest b = merkle_leaf_hash(std::span<const std::uint8_t>(data, 2));
  CHECK(merkle_interior_hash(a, b) == tagged(0x01, a, b));
  CHECK(merkle_interior_hash(a, b) != merkle_interior_hash(b, a));
  CHECK(merkle_empty_root() == reference_root({}));
}

TEST_CASE("incremental tree matches the reference root and proves every leaf") {
  std::mt19937_64 rng(5);
  MerkleTree tree;
  std::vector<Digest> leaves;
  CHECK(tree.root() == merkle_empty_root());
  for (std::size_t n = 1; n <= 70; ++n) {
    leaves.push_back(random_leaf(rng));
    tree.append(leaves.back());
    REQUIRE(tree.root() == reference_root(leaves));
    CHECK(merkle_root(leaves) == tree.root());
    for (std::size_t i = 0; i < n; ++i) {
      const auto proof = tree.prove(i);
      CHECK(verify_inclusion(leaves[i], proof, tree.root()));
      if (n > 1) CHECK_FALSE(verify_inclusion(leaves[(i + 1) % n], proof, tree.root()));
    }
  }
  MerkleTree bulk;
  bulk.assign(leaves);
  CHECK(bulk.root() == tree.root());
}

TEST_CASE("inclusion proofs reject altered siblings, indices and counts") {
  std::mt19937_64 rng(9);
  std::vector<Digest> leaves;
  for (int i = 0; i < 13; ++i) leaves.push_back(random_leaf(rng));
  MerkleTree tree;
  tree.assign(leaves);
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    auto proof = tree.prove(i);
    REQUIRE(verify_inclusion(leaves[i], proof, tree.root()));
    for (std::size_t s = 0; s < proof.siblings.size(); ++s) {
      auto bad = proof;
      bad.siblings[s][0] ^= 0x80;
      CHECK_FALSE(verify_inclusion(leaves[i], bad, tree.root()));
    }
    auto moved = proof;
    moved.leaf_index = (i + 1) % leaves.size();
    CHECK_FALSE(verify_inclusion(leaves[i], moved, tree.root()));
    auto truncated = proof;
    truncated.leaf_count = 0;
    CHECK_FALSE(verify_inclusion(leaves[i], truncated, tree.root()));
  }
}

TEST_CASE("1000 random single-bit tampers of a committed log are all caught") {
  std::mt19937_64 rng(2024);
  int caught = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    NodeLog log(alias(1));
    const std::size_t n = 1 + rng() % 40;
    for (std::size_t i = 0; i < n; ++i) log.append(random_entry(rng, i, static_cast<double>(i)));
    const AuditParty published = publish(log);

    const std::size_t victim = rng() % n;
    const LogEntry original = log.entries()[victim];
    const LogEntry forged = flip_bit(original, rng() % kFlippableBits);
    REQUIRE(serialize(forged) != serialize(original));
    log.tamper(victim, forged);
    CHECK(log.root() != published.published_root);

    // The edited entry cannot be proven against the earlier commitment.
    const auto d = log.disclose(exact_pattern(forged));
    REQUIRE(d);
    const bool accepted = verify_disclosure(*d, exact_pattern(forged), published.published_root);
    const Pattern want = exact_pattern(forged);
    const bool fellow =
        hash_verify(published, std::span<const Pattern>(&want, 1)) == Fellowship::Fellow;
    CHECK_FALSE(accepted);
    CHECK_FALSE(fellow);
    if (!accepted && !fellow) ++caught;
  }
  CHECK(caught == 1000);
}

TEST_CASE("historical roots cover prefixes of the log") {
  std::mt19937_64 rng(3);
  NodeLog log(alias(2));
  std::vector<Digest> leaves;
  for (std::size_t i = 0; i < 20; ++i) {
    const auto e = random_entry(rng, i, static_cast<double>(i));
    log.append(e);
    leaves.push_back(leaf_hash(e));
    CHECK(log.root_at(i + 1) == reference_root(leaves));
  }
  CHECK(log.root_at(0) == merkle_empty_root());
  CHECK(build_root(log.entries()) == log.root());
}
