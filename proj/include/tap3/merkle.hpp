#pragma once

// Binary Merkle hash tree with domain-separated leaves and interior nodes.
//
//   leaf     = H(0x00 || data)
//   interior = H(0x01 || left || right)
//   a node without a right sibling is promoted to the next level unhashed
//   empty    = H(0x02)

#include <cstdint>
#include <span>
#include <vector>

#include "tap3/crypto.hpp"

namespace tap3 {

Digest merkle_leaf_hash(std::span<const std::uint8_t> data);
Digest merkle_interior_hash(const Digest& left, const Digest& right);
Digest merkle_empty_root();

struct InclusionProof {
  std::uint64_t leaf_index = 0;
  std::uint64_t leaf_count = 0;
  std::vector<Digest> siblings;  // bottom-up; promoted levels contribute nothing
};

bool verify_inclusion(const Digest& leaf_hash, const InclusionProof& proof,
                      const Digest& root);

/// Append-only tree; every append updates O(log n) interior nodes.
class MerkleTree {
 public:
  void append(const Digest& leaf_hash);
  void assign(std::span<const Digest> leaf_hashes);
  Digest root() const;
  std::size_t size() const { return levels_.empty() ? 0 : levels_[0].size(); }
  InclusionProof prove(std::size_t leaf_index) const;
  const std::vector<Digest>& leaves() const;

 private:
  void recompute_from(std::size_t leaf_index);
  std::vector<std::vector<Digest>> levels_;
};

/// Root computed from scratch, level by level.
Digest merkle_root(std::span<const Digest> leaf_hashes);

}  // namespace tap3
