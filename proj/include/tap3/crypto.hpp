#pragma once

// Key pre-distribution, keyed PRF / HMAC primitives, fellow pseudonym chains
// and the destination-side trapdoor index.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tap3 {

using NodeId = std::uint32_t;

inline constexpr std::size_t kDigestSize = 32;
using Digest = std::array<std::uint8_t, kDigestSize>;

std::string to_hex(std::span<const std::uint8_t> bytes);
std::optional<std::vector<std::uint8_t>> from_hex(const std::string& hex);

/// 8-byte big-endian encoding used wherever a NodeId or counter is hashed.
std::array<std::uint8_t, 8> encode_be64(std::uint64_t value);

Digest sha256(std::span<const std::uint8_t> data);

/// Raw HMAC-SHA-256 over arbitrary-length key material.
Digest hmac_sha256(std::span<const std::uint8_t> key,
                   std::span<const std::uint8_t> message);

struct MasterKey {
  Digest bytes{};
  /// Draws a fresh key from a 64-bit seed stream; only the setup phase calls this.
  static MasterKey from_seed(std::uint64_t seed, NodeId owner);
  bool operator==(const MasterKey&) const = default;
};

struct PairwiseKey {
  Digest bytes{};
  NodeId sender = 0;
  NodeId receiver = 0;
  bool operator==(const PairwiseKey&) const = default;
};

struct Pseudonym {
  Digest digest{};
  auto operator<=>(const Pseudonym&) const = default;
  std::string hex() const { return to_hex(digest); }
};

/// K_{S,R} = PRF_{K_R}(S), with S encoded as 8-byte big-endian.
PairwiseKey derive_pairwise_key(const MasterKey& receiver_master, NodeId receiver,
                                NodeId sender);

Pseudonym prf(const PairwiseKey& key, std::span<const std::uint8_t> input);

Digest hmac_tag(const PairwiseKey& key, std::span<const std::uint8_t> message);
bool verify_hmac(const PairwiseKey& key, std::span<const std::uint8_t> message,
                 const Digest& tag);

enum class ChainDirection : std::uint8_t { ForwardOfSource = 0, ForwardOfDestination = 1 };

/// PS_1 = fn(S), PS_n = fn(PS_{n-1}); likewise PD from the destination id.
class PseudonymChain {
 public:
  PseudonymChain(PairwiseKey key, NodeId seed_identity, ChainDirection direction);

  const PairwiseKey& key() const { return key_; }
  NodeId seed_identity() const { return seed_; }
  ChainDirection direction() const { return direction_; }
  std::uint64_t index() const { return index_; }
  const Pseudonym& current() const { return current_; }

  /// Returns the chain moved one position forward.
  [[nodiscard]] PseudonymChain advanced() const;
  void advance();

  /// The pseudonym at position `index` (>= 1), computed from scratch.
  static Pseudonym at(const PairwiseKey& key, NodeId seed_identity, std::uint64_t index);

 private:
  PairwiseKey key_;
  NodeId seed_;
  ChainDirection direction_;
  std::uint64_t index_ = 1;
  Pseudonym current_;
};

PseudonymChain advance_chain(const PseudonymChain& chain);

struct TrapdoorMatch {
  NodeId peer = 0;
  ChainDirection direction = ChainDirection::ForwardOfDestination;
  std::uint64_t index = 0;
  bool operator==(const TrapdoorMatch&) const = default;
};

/// Ordered index of precomputed future pseudonyms for each chain a node must
/// recognise. Lookups are exact-match over a balanced search tree.
class TrapdoorIndex {
 public:
  static constexpr std::size_t kDefaultWindow = 16;

  explicit TrapdoorIndex(std::size_t window = kDefaultWindow);

  /// Registers the chain seeded at `seed_identity` under `key` (peer = other end).
  void add_chain(const PairwiseKey& key, NodeId peer, NodeId seed_identity,
                 ChainDirection direction);

  /// Pure lookup.
  std::optional<TrapdoorMatch> check(const Pseudonym& candidate) const;

  /// Lookup that also consumes the window; once half of a chain's window has
  /// been passed it slides to the next `window` pseudonyms.
  std::optional<TrapdoorMatch> check_and_refill(const Pseudonym& candidate);

  std::size_t window() const { return window_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t chain_count() const { return chains_.size(); }

 private:
  struct Chain {
    PairwiseKey key;
    NodeId peer;
    NodeId seed;
    ChainDirection direction;
    std::uint64_t lo = 1;  // first precomputed index
  };
  void fill(std::size_t chain_slot);
  void evict(std::size_t chain_slot);

  std::size_t window_;
  std::vector<Chain> chains_;
  std::map<Pseudonym, std::pair<std::size_t, std::uint64_t>> entries_;
};

std::optional<TrapdoorMatch> trapdoor_check(const TrapdoorIndex& index,
                                            const Pseudonym& candidate);

}  // namespace tap3
