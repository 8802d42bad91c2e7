#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "tap3/crypto.hpp"

using namespace tap3;

namespace {

std::vector<std::uint8_t> bytes(const std::string& s) { return {s.begin(), s.end()}; }
std::vector<std::uint8_t> filled(std::size_t n, std::uint8_t v) { return std::vector<std::uint8_t>(n, v); }

PairwiseKey key_for(NodeId receiver, NodeId sender, std::uint64_t seed = 7) {
  return derive_pairwise_key(MasterKey::from_seed(seed, receiver), receiver, sender);
}

int hamming(const Digest& a, const Digest& b) {
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += __builtin_popcount(a[i] ^ b[i]);
  return d;
}

}  // namespace

TEST_CASE("sha256 known answer") {
  CHECK(to_hex(sha256(bytes("abc"))) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("hmac-sha256 RFC 4231 test cases 1-4") {
  CHECK(to_hex(hmac_sha256(filled(20, 0x0b), bytes("Hi There"))) ==
        "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7");
  CHECK(to_hex(hmac_sha256(bytes("Jefe"), bytes("what do ya want for nothing?"))) ==
        "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
  CHECK(to_hex(hmac_sha256(filled(20, 0xaa), filled(50, 0xdd))) ==
        "773ea91e36800e46854db8ebd09181a72959098b3ef8c122d9635514ced565fe");
  std::vector<std::uint8_t> key4;
  for (int i = 1; i <= 25; ++i) key4.push_back(static_cast<std::uint8_t>(i));
  CHECK(to_hex(hmac_sha256(key4, filled(50, 0xcd))) ==
        "82558a389a443c0ea4cc819899f2083a85f0faa3e578f8077a2e3ff46729665b");
}

TEST_CASE("hex round trip and big-endian encoding") {
  auto be = encode_be64(0x0102030405060708ull);
  CHECK(to_hex(be) == "0102030405060708");
  auto back = from_hex("00ff10");
  REQUIRE(back);
  CHECK(*back == std::vector<std::uint8_t>{0x00, 0xff, 0x10});
  CHECK_FALSE(from_hex("abc"));
  CHECK_FALSE(from_hex("zz"));
}

TEST_CASE("pairwise key is HMAC of the sender under the receiver master") {
  const auto master = MasterKey::from_seed(3, 9);
  const auto k = derive_pairwise_key(master, 9, 4);
  CHECK(k.sender == 4);
  CHECK(k.receiver == 9);
  CHECK(k.bytes == hmac_sha256(master.bytes, encode_be64(4)));
  CHECK(k != derive_pairwise_key(master, 9, 5));
  CHECK(MasterKey::from_seed(3, 9) == master);
  CHECK_FALSE(MasterKey::from_seed(4, 9) == master);
}

TEST_CASE("hmac tags verify only for the signed message and key") {
  const auto k = key_for(2, 1);
  const auto msg = bytes("route reply");
  const auto tag = hmac_tag(k, msg);
  CHECK(verify_hmac(k, msg, tag));
  auto other = msg;
  other[0] ^= 1;
  CHECK_FALSE(verify_hmac(k, other, tag));
  CHECK_FALSE(verify_hmac(key_for(2, 3), msg, tag));
}

TEST_CASE("pseudonym chain follows the iterated prf") {
  const auto k = key_for(5, 1);
  PseudonymChain chain(k, 1, ChainDirection::ForwardOfSource);
  Digest expect = hmac_sha256(k.bytes, encode_be64(1));
  for (std::uint64_t i = 1; i <= 50; ++i) {
    CHECK(chain.index() == i);
    CHECK(chain.current().digest == expect);
    CHECK(PseudonymChain::at(k, 1, i) == chain.current());
    expect = hmac_sha256(k.bytes, expect);
    chain = advance_chain(chain);
  }
  CHECK_THROWS(PseudonymChain::at(k, 1, 0));
}

TEST_CASE("trapdoor completeness: every in-window pseudonym is recognised") {
  TrapdoorIndex index;
  for (NodeId s = 1; s <= 10; ++s) {
    index.add_chain(key_for(0, s), s, 0, ChainDirection::ForwardOfDestination);
  }
  CHECK(index.size() == 10 * TrapdoorIndex::kDefaultWindow);
  for (NodeId s = 1; s <= 10; ++s) {
    for (std::uint64_t i = 1; i <= TrapdoorIndex::kDefaultWindow; ++i) {
      auto m = trapdoor_check(index, PseudonymChain::at(key_for(0, s), 0, i));
      REQUIRE(m);
      CHECK(m->peer == s);
      CHECK(m->index == i);
    }
  }
}

TEST_CASE("trapdoor refill keeps a sequentially used chain recognisable") {
  TrapdoorIndex index(8);
  const auto k = key_for(0, 3);
  index.add_chain(k, 3, 0, ChainDirection::ForwardOfDestination);
  PseudonymChain chain(k, 0, ChainDirection::ForwardOfDestination);
  for (int i = 0; i < 300; ++i) {
    auto m = index.check_and_refill(chain.current());
    REQUIRE(m);
    CHECK(m->index == chain.index());
    chain.advance();
    CHECK(index.size() == 8);
  }
}

TEST_CASE("trapdoor soundness: foreign pseudonyms never match") {
  TrapdoorIndex index;
  for (NodeId s = 1; s <= 10; ++s) {
    index.add_chain(key_for(0, s), s, 0, ChainDirection::ForwardOfDestination);
  }
  std::mt19937_64 rng(11);
  for (int i = 0; i < 5000; ++i) {
    Pseudonym p;
    for (auto& b : p.digest) b = static_cast<std::uint8_t>(rng());
    CHECK_FALSE(index.check(p));
  }
  // Chains addressed to another destination, or keyed for another receiver.
  for (NodeId s = 1; s <= 10; ++s) {
    for (std::uint64_t i = 1; i <= 16; ++i) {
      CHECK_FALSE(index.check(PseudonymChain::at(key_for(0, s), 99, i)));
      CHECK_FALSE(index.check(PseudonymChain::at(key_for(1, s), 0, i)));
    }
  }
}

TEST_CASE("unlinkability: pseudonyms look independent across chains and rounds") {
  std::set<Pseudonym> seen;
  std::vector<Pseudonym> all;
  for (NodeId s = 1; s <= 20; ++s) {
    PseudonymChain chain(key_for(0, s), 0, ChainDirection::ForwardOfDestination);
    for (int i = 0; i < 50; ++i) {
      CHECK(seen.insert(chain.current()).second);
      all.push_back(chain.current());
      chain.advance();
    }
  }
  // Consecutive rounds of one chain and same-round pseudonyms of different
  // sources differ in about half their bits.
  double total = 0;
  int pairs = 0;
  for (std::size_t i = 1; i < all.size(); ++i) {
    const int d = hamming(all[i - 1].digest, all[i].digest);
    CHECK(d > 80);
    CHECK(d < 176);
    total += d;
    ++pairs;
  }
  CHECK(total / pairs == doctest::Approx(128).epsilon(0.03));
  // The identity never appears in its pseudonym.
  for (NodeId s = 1; s <= 20; ++s) {
    const auto id = encode_be64(s);
    const auto p = PseudonymChain::at(key_for(0, s), s, 1);
    CHECK(std::search(p.digest.begin(), p.digest.end(), id.begin(), id.end()) == p.digest.end());
  }
}
