#include "tap3/merkle.hpp"

#include <stdexcept>

namespace tap3 {

Digest merkle_leaf_hash(std::span<const std::uint8_t> data) {
  std::vector<std::uint8_t> buf;
  buf.reserve(data.size() + 1);
  buf.push_back(0x00);
  buf.insert(buf.end(), data.begin(), data.end());
  return sha256(buf);
}

Digest merkle_interior_hash(const Digest& left, const Digest& right) {
  std::array<std::uint8_t, 1 + 2 * kDigestSize> buf{};
  buf[0] = 0x01;
  std::copy(left.begin(), left.end(), buf.begin() + 1);
  std::copy(right.begin(), right.end(), buf.begin() + 1 + kDigestSize);
  return sha256(buf);
}

Digest merkle_empty_root() {
  static const std::uint8_t tag = 0x02;
  return sha256(std::span<const std::uint8_t>(&tag, 1));
}

Digest merkle_root(std::span<const Digest> leaf_hashes) {
  if (leaf_hashes.empty()) return merkle_empty_root();
  std::vector<Digest> level(leaf_hashes.begin(), leaf_hashes.end());
  while (level.size() > 1) {
    std::vector<Digest> next;
    next.reserve((level.size() + 1) / 2);
    for (std::size_t i = 0; i < level.size(); i += 2) {
      if (i + 1 < level.size()) {
        next.push_back(merkle_interior_hash(level[i], level[i + 1]));
      } else {
        next.push_back(level[i]);
      }
    }
    level = std::move(next);
  }
  return level[0];
}

bool verify_inclusion(const Digest& leaf_hash, const InclusionProof& proof,
                      const Digest& root) {
  if (proof.leaf_count == 0 || proof.leaf_index >= proof.leaf_count) return false;
  Digest acc = leaf_hash;
  std::uint64_t index = proof.leaf_index;
  std::uint64_t width = proof.leaf_count;
  std::size_t used = 0;
  while (width > 1) {
    const bool promoted = (index % 2 == 0) && (index + 1 == width);
    if (!promoted) {
      if (used >= proof.siblings.size()) return false;
      const Digest& sib = proof.siblings[used++];
      acc = (index % 2 == 0) ? merkle_interior_hash(acc, sib) : merkle_interior_hash(sib, acc);
    }
    index /= 2;
    width = (width + 1) / 2;
  }
  return used == proof.siblings.size() && acc == root;
}

void MerkleTree::append(const Digest& leaf_hash) {
  if (levels_.empty()) levels_.emplace_back();
  levels_[0].push_back(leaf_hash);
  recompute_from(levels_[0].size() - 1);
}

void MerkleTree::assign(std::span<const Digest> leaf_hashes) {
  levels_.clear();
  for (const auto& h : leaf_hashes) append(h);
}

void MerkleTree::recompute_from(std::size_t index) {
  std::size_t level = 0;
  while (levels_[level].size() > 1) {
    const auto& cur = levels_[level];
    const std::size_t parent = index / 2;
    const std::size_t left = parent * 2;
    Digest value = (left + 1 < cur.size()) ? merkle_interior_hash(cur[left], cur[left + 1])
                                           : cur[left];
    if (levels_.size() <= level + 1) levels_.emplace_back();
    auto& up = levels_[level + 1];
    if (parent < up.size()) {
      up[parent] = value;
    } else {
      up.push_back(value);
    }
    index = parent;
    ++level;
  }
  levels_.resize(level + 1);
}

Digest MerkleTree::root() const {
  if (levels_.empty() || levels_[0].empty()) return merkle_empty_root();
  return levels_.back()[0];
}

const std::vector<Digest>& MerkleTree::leaves() const {
  static const std::vector<Digest> kNone;
  return levels_.empty() ? kNone : levels_[0];
}

InclusionProof MerkleTree::prove(std::size_t leaf_index) const {
  if (leaf_index >= size()) throw std::out_of_range("leaf index beyond tree");
  InclusionProof proof;
  proof.leaf_index = leaf_index;
  proof.leaf_count = size();
  std::size_t index = leaf_index;
  for (std::size_t level = 0; level + 1 < levels_.size(); ++level) {
    const auto& cur = levels_[level];
    const std::size_t sib = index ^ 1u;
    if (sib < cur.size()) proof.siblings.push_back(cur[sib]);
    index /= 2;
  }
  return proof;
}

}  // namespace tap3
