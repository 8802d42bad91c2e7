#include "tap3/crypto.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/sha.h>

#include <stdexcept>

namespace tap3 {

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

std::optional<std::vector<std::uint8_t>> from_hex(const std::string& hex) {
  if (hex.size() % 2 != 0) return std::nullopt;
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  std::vector<std::uint8_t> out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = nibble(hex[2 * i]);
    int lo = nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

std::array<std::uint8_t, 8> encode_be64(std::uint64_t value) {
  std::array<std::uint8_t, 8> out{};
  for (int i = 7; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(value & 0xff);
    value >>= 8;
  }
  return out;
}

Digest sha256(std::span<const std::uint8_t> data) {
  Digest out{};
  SHA256(data.data(), data.size(), out.data());
  return out;
}

Digest hmac_sha256(std::span<const std::uint8_t> key,
                   std::span<const std::uint8_t> message) {
  Digest out{};
  unsigned int len = 0;
  // OpenSSL rejects a null key pointer even for zero length.
  static const std::uint8_t kEmpty = 0;
  const std::uint8_t* key_ptr = key.empty() ? &kEmpty : key.data();
  if (HMAC(EVP_sha256(), key_ptr, static_cast<int>(key.size()), message.data(),
           message.size(), out.data(), &len) == nullptr ||
      len != kDigestSize) {
    throw std::runtime_error("HMAC-SHA-256 failed");
  }
  return out;
}

MasterKey MasterKey::from_seed(std::uint64_t seed, NodeId owner) {
  std::array<std::uint8_t, 24> material{};
  static constexpr std::uint8_t kLabel[8] = {'t', 'a', 'p', '3', 'm', 'k', 'e', 'y'};
  std::copy(std::begin(kLabel), std::end(kLabel), material.begin());
  auto s = encode_be64(seed);
  auto o = encode_be64(owner);
  std::copy(s.begin(), s.end(), material.begin() + 8);
  std::copy(o.begin(), o.end(), material.begin() + 16);
  return MasterKey{sha256(material)};
}

PairwiseKey derive_pairwise_key(const MasterKey& receiver_master, NodeId receiver,
                                NodeId sender) {
  auto encoded = encode_be64(sender);
  return PairwiseKey{hmac_sha256(receiver_master.bytes, encoded), sender, receiver};
}

Pseudonym prf(const PairwiseKey& key, std::span<const std::uint8_t> input) {
  return Pseudonym{hmac_sha256(key.bytes, input)};
}

Digest hmac_tag(const PairwiseKey& key, std::span<const std::uint8_t> message) {
  return hmac_sha256(key.bytes, message);
}

bool verify_hmac(const PairwiseKey& key, std::span<const std::uint8_t> message,
                 const Digest& tag) {
  Digest expected = hmac_tag(key, message);
  return CRYPTO_memcmp(expected.data(), tag.data(), kDigestSize) == 0;
}

// ---------------------------------------------------------------------------

PseudonymChain::PseudonymChain(PairwiseKey key, NodeId seed_identity,
                               ChainDirection direction)
    : key_(key), seed_(seed_identity), direction_(direction) {
  auto encoded = encode_be64(seed_identity);
  current_ = prf(key_, encoded);
}

PseudonymChain PseudonymChain::advanced() const {
  PseudonymChain next = *this;
  next.advance();
  return next;
}

void PseudonymChain::advance() {
  current_ = prf(key_, current_.digest);
  ++index_;
}

Pseudonym PseudonymChain::at(const PairwiseKey& key, NodeId seed_identity,
                             std::uint64_t index) {
  if (index == 0) throw std::invalid_argument("pseudonym chain index starts at 1");
  auto encoded = encode_be64(seed_identity);
  Pseudonym p = prf(key, encoded);
  for (std::uint64_t i = 1; i < index; ++i) p = prf(key, p.digest);
  return p;
}

PseudonymChain advance_chain(const PseudonymChain& chain) { return chain.advanced(); }

// ---------------------------------------------------------------------------

TrapdoorIndex::TrapdoorIndex(std::size_t window) : window_(window) {
  if (window_ == 0) throw std::invalid_argument("trapdoor window must be positive");
}

void TrapdoorIndex::add_chain(const PairwiseKey& key, NodeId peer, NodeId seed_identity,
                              ChainDirection direction) {
  chains_.push_back(Chain{key, peer, seed_identity, direction, 1});
  fill(chains_.size() - 1);
}

void TrapdoorIndex::fill(std::size_t slot) {
  const Chain& c = chains_[slot];
  Pseudonym p = PseudonymChain::at(c.key, c.seed, c.lo);
  for (std::size_t k = 0; k < window_; ++k) {
    entries_.emplace(p, std::make_pair(slot, c.lo + k));
    p = prf(c.key, p.digest);
  }
}

void TrapdoorIndex::evict(std::size_t slot) {
  for (auto it = entries_.begin(); it != entries_.end();) {
    if (it->second.first == slot) {
      it = entries_.erase(it);
    } else {
      ++it;
    }
  }
}

std::optional<TrapdoorMatch> TrapdoorIndex::check(const Pseudonym& candidate) const {
  auto it = entries_.find(candidate);
  if (it == entries_.end()) return std::nullopt;
  const Chain& c = chains_[it->second.first];
  return TrapdoorMatch{c.peer, c.direction, it->second.second};
}

std::optional<TrapdoorMatch> TrapdoorIndex::check_and_refill(const Pseudonym& candidate) {
  auto it = entries_.find(candidate);
  if (it == entries_.end()) return std::nullopt;
  auto [slot, idx] = it->second;
  Chain& c = chains_[slot];
  TrapdoorMatch match{c.peer, c.direction, idx};
  if (idx + 1 - c.lo >= window_ / 2) {
    evict(slot);
    c.lo = idx + 1;
    fill(slot);
  }
  return match;
}

std::optional<TrapdoorMatch> trapdoor_check(const TrapdoorIndex& index,
                                            const Pseudonym& candidate) {
  return index.check(candidate);
}

}  // namespace tap3
