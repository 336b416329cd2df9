#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bytes.hpp"
#include "hash.hpp"

namespace tcat {

// Hash tree with domain separation: leaf nodes hash 0x00 || bytes, internal
// nodes hash 0x01 || child digests. Levels fill left to right; a trailing
// group smaller than the arity is hashed as-is (no padding), so every tree
// shape is uniquely determined by (leaf count, arity). A single-leaf tree's
// root is the leaf digest itself.
constexpr std::uint32_t kMinArity = 2;
constexpr std::uint32_t kMaxArity = 256;

Digest leaf_digest(BytesView leaf);
Digest internal_digest(std::span<const Digest> children);

struct MerkleTree {
  std::uint32_t arity = 0;
  // levels[0] holds the leaf digests; levels.back() holds exactly the root.
  std::vector<std::vector<Digest>> levels;

  std::uint64_t leaf_count() const { return levels.empty() ? 0 : levels.front().size(); }
  const Digest& root() const;
};

MerkleTree build_tree(std::span<const Bytes> leaves, std::uint32_t arity);
MerkleTree build_tree_from_digests(std::span<const Digest> leaf_digests, std::uint32_t arity);

// Inclusion proof: per level, the position of the tracked node within its
// group and the digests of its siblings in group order.
struct AuditPath {
  struct Level {
    std::uint8_t position = 0;
    std::vector<Digest> siblings;
  };
  std::uint64_t leaf_index = 0;
  std::vector<Level> levels;

  Bytes wire_bytes() const;
  static AuditPath from_wire(BytesView data);
};

AuditPath audit_path(const MerkleTree& tree, std::uint64_t leaf_index);

// Recomputes the root from the leaf bytes and the path; false on mismatch or
// malformed path, never throws.
bool verify_path(BytesView leaf, const AuditPath& path, const Digest& root);

// Same walk, but the level-0 node is a digest value (trees built with
// build_tree_from_digests).
bool verify_digest_path(const Digest& leaf_value, const AuditPath& path, const Digest& root);

// Number of internal nodes (all nodes above the leaf level).
std::uint64_t node_count(std::uint64_t leaf_count, std::uint32_t arity);

// Splits data into fixed-size chunks (last one ragged, empty data gives one
// empty chunk): the leaf layout for hashing large byte strings.
std::vector<Bytes> chunk_bytes(BytesView data, std::size_t chunk_size);

}  // namespace tcat
