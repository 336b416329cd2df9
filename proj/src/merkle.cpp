#include "merkle.hpp"

#include "error.hpp"

namespace tcat {

Digest leaf_digest(BytesView leaf) {
  Sha256 h;
  h.update_byte(0x00);
  h.update(leaf);
  return h.finish();
}

Digest internal_digest(std::span<const Digest> children) {
  if (children.empty() || children.size() > kMaxArity)
    raise(Errc::invalid_argument, "internal node child count out of range");
  Sha256 h;
  h.update_byte(0x01);
  for (const Digest& c : children) h.update(c.view());
  return h.finish();
}

const Digest& MerkleTree::root() const {
  if (levels.empty()) raise(Errc::internal, "empty tree has no root");
  return levels.back().front();
}

static void check_arity(std::uint32_t arity) {
  if (arity < kMinArity || arity > kMaxArity)
    raise(Errc::invalid_argument, "tree arity out of range");
}

MerkleTree build_tree_from_digests(std::span<const Digest> leaf_digests, std::uint32_t arity) {
  check_arity(arity);
  if (leaf_digests.empty()) raise(Errc::invalid_argument, "tree needs at least one leaf");
  MerkleTree t;
  t.arity = arity;
  t.levels.emplace_back(leaf_digests.begin(), leaf_digests.end());
  while (t.levels.back().size() > 1) {
    const std::vector<Digest>& cur = t.levels.back();
    std::vector<Digest> next;
    next.reserve((cur.size() + arity - 1) / arity);
    for (std::size_t i = 0; i < cur.size(); i += arity) {
      std::size_t group = std::min<std::size_t>(arity, cur.size() - i);
      next.push_back(internal_digest(std::span<const Digest>(cur).subspan(i, group)));
    }
    t.levels.push_back(std::move(next));
  }
  return t;
}

MerkleTree build_tree(std::span<const Bytes> leaves, std::uint32_t arity) {
  check_arity(arity);
  if (leaves.empty()) raise(Errc::invalid_argument, "tree needs at least one leaf");
  std::vector<Digest> ds;
  ds.reserve(leaves.size());
  for (const Bytes& l : leaves) ds.push_back(leaf_digest(as_view(l)));
  return build_tree_from_digests(ds, arity);
}

AuditPath audit_path(const MerkleTree& tree, std::uint64_t leaf_index) {
  if (tree.levels.empty() || leaf_index >= tree.leaf_count())
    raise(Errc::invalid_argument, "leaf index out of range");
  AuditPath path;
  path.leaf_index = leaf_index;
  std::size_t idx = static_cast<std::size_t>(leaf_index);
  for (std::size_t lvl = 0; lvl + 1 < tree.levels.size(); ++lvl) {
    const std::vector<Digest>& nodes = tree.levels[lvl];
    std::size_t group_start = (idx / tree.arity) * tree.arity;
    std::size_t group_size = std::min<std::size_t>(tree.arity, nodes.size() - group_start);
    AuditPath::Level level;
    level.position = static_cast<std::uint8_t>(idx - group_start);
    for (std::size_t i = 0; i < group_size; ++i)
      if (group_start + i != idx) level.siblings.push_back(nodes[group_start + i]);
    path.levels.push_back(std::move(level));
    idx /= tree.arity;
  }
  return path;
}

bool verify_digest_path(const Digest& leaf_value, const AuditPath& path, const Digest& root) {
  try {
    Digest cur = leaf_value;
    std::vector<Digest> group;
    for (const AuditPath::Level& level : path.levels) {
      if (level.position > level.siblings.size()) return false;
      if (level.siblings.size() + 1 > kMaxArity) return false;
      group.clear();
      group.insert(group.end(), level.siblings.begin(), level.siblings.begin() + level.position);
      group.push_back(cur);
      group.insert(group.end(), level.siblings.begin() + level.position, level.siblings.end());
      cur = internal_digest(group);
    }
    return cur == root;
  } catch (...) {
    return false;
  }
}

bool verify_path(BytesView leaf, const AuditPath& path, const Digest& root) {
  return verify_digest_path(leaf_digest(leaf), path, root);
}

std::uint64_t node_count(std::uint64_t leaf_count, std::uint32_t arity) {
  check_arity(arity);
  if (leaf_count == 0) raise(Errc::invalid_argument, "tree needs at least one leaf");
  std::uint64_t total = 0;
  std::uint64_t n = leaf_count;
  while (n > 1) {
    n = (n + arity - 1) / arity;
    total += n;
  }
  return total;
}

std::vector<Bytes> chunk_bytes(BytesView data, std::size_t chunk_size) {
  if (chunk_size == 0) raise(Errc::invalid_argument, "chunk size must be >= 1");
  std::vector<Bytes> chunks;
  if (data.empty()) {
    chunks.emplace_back();
    return chunks;
  }
  chunks.reserve((data.size() + chunk_size - 1) / chunk_size);
  for (std::size_t off = 0; off < data.size(); off += chunk_size) {
    std::size_t len = std::min(chunk_size, data.size() - off);
    BytesView v = data.subspan(off, len);
    chunks.emplace_back(v.begin(), v.end());
  }
  return chunks;
}

Bytes AuditPath::wire_bytes() const {
  ByteWriter w;
  w.u64(leaf_index);
  w.u16(static_cast<std::uint16_t>(levels.size()));
  for (const Level& level : levels) {
    w.u8(level.position);
    w.u8(static_cast<std::uint8_t>(level.siblings.size()));
    for (const Digest& d : level.siblings) w.raw(d.view());
  }
  return w.take();
}

AuditPath AuditPath::from_wire(BytesView data) {
  ByteReader r(data);
  AuditPath p;
  p.leaf_index = r.u64();
  std::uint16_t depth = r.u16();
  p.levels.resize(depth);
  for (Level& level : p.levels) {
    level.position = r.u8();
    std::uint8_t count = r.u8();
    level.siblings.resize(count);
    for (Digest& d : level.siblings) {
      BytesView v = r.raw(32);
      std::copy(v.begin(), v.end(), d.bytes.begin());
    }
  }
  r.expect_done();
  return p;
}

}  // namespace tcat
