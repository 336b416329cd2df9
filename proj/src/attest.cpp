#include "attest.hpp"

#include <algorithm>
#include <set>

#include "error.hpp"

namespace tcat {

Bytes meta_bytes(const MetaFields& f) {
  ByteWriter w;
  w.u16(f.version);
  w.u8(f.hash_alg);
  w.u8(f.sig_alg);
  w.u16(f.bulk_arity);
  w.u64(f.steps);
  w.u64(f.batch_size);
  w.u64(f.dataset_size);
  w.u64(f.param_count);
  return w.take();
}

MetaFields parse_meta(BytesView data) {
  ByteReader r(data);
  MetaFields f;
  f.version = r.u16();
  f.hash_alg = r.u8();
  f.sig_alg = r.u8();
  f.bulk_arity = r.u16();
  f.steps = r.u64();
  f.batch_size = r.u64();
  f.dataset_size = r.u64();
  f.param_count = r.u64();
  r.expect_done();
  if (f.version != 1) raise(Errc::format, "unsupported record version");
  if (f.hash_alg != 1 || f.sig_alg != 1) raise(Errc::format, "unsupported algorithm tags");
  return f;
}

Digest checkpoint_combined(std::uint64_t step, const Digest& state_root,
                           const Digest& slice_root, const Digest& aux_root) {
  Sha256 h;
  h.update_byte(0x01);
  ByteWriter w;
  w.u64(step);
  h.update(as_view(w.bytes()));
  h.update(state_root.view());
  h.update(slice_root.view());
  h.update(aux_root.view());
  return h.finish();
}

namespace {

MerkleTree state_bytes_tree(BytesView state_bytes, std::uint32_t arity) {
  std::vector<Bytes> chunks = chunk_bytes(state_bytes, kStateChunkBytes);
  return build_tree(chunks, arity);
}

MerkleTree manifest_tree_of(const DatasetManifest& m, std::uint32_t arity) {
  std::vector<Bytes> leaves;
  leaves.reserve(static_cast<std::size_t>(m.size));
  for (std::uint64_t i = 1; i <= m.size; ++i) leaves.push_back(m.entry_leaf(i));
  return build_tree(leaves, arity);
}

MerkleTree schedule_rows_tree(const BatchSchedule& s, std::uint64_t first_row,
                              std::uint64_t last_row, std::uint32_t arity) {
  // Rows [first_row, last_row); an empty range commits the sentinel leaf.
  std::vector<Bytes> leaves;
  if (first_row >= last_row) {
    leaves.push_back(Bytes{kEmptySliceSentinel});
  } else {
    leaves.reserve(static_cast<std::size_t>(last_row - first_row));
    for (std::uint64_t t = first_row; t < last_row; ++t) leaves.push_back(s.row_leaf(t));
  }
  return build_tree(leaves, arity);
}

// Fills the derived commitment fields from the raw category data.
void rebuild_commitments(AttestationRecord& rec) {
  rec.h1 = leaf_digest(as_view(rec.meta));
  rec.h2 = leaf_digest(as_view(rec.setup));
  rec.h3 = leaf_digest(as_view(rec.trainer));
  rec.manifest_tree = manifest_tree_of(rec.manifest, rec.bulk_arity);
  rec.h4 = rec.manifest_tree.root();

  if (rec.mode == RecordMode::complete) {
    rec.schedule_tree = schedule_rows_tree(rec.schedule, 0, rec.schedule.steps, rec.bulk_arity);
    rec.h5 = rec.schedule_tree.root();
    rec.initial_state_tree = state_bytes_tree(as_view(rec.initial_state), rec.bulk_arity);
    rec.h6 = rec.initial_state_tree.root();
    std::vector<Digest> cats{rec.h1, rec.h2, rec.h3, rec.h4, rec.h5, rec.h6};
    rec.root = internal_digest(cats);
    return;
  }

  rec.commits.clear();
  rec.commits.reserve(rec.checkpoints.size());
  std::vector<Digest> leaf_values;
  leaf_values.reserve(rec.checkpoints.size());
  for (std::size_t j = 0; j < rec.checkpoints.size(); ++j) {
    const Checkpoint& cp = rec.checkpoints[j];
    std::uint64_t next_step =
        (j + 1 < rec.checkpoints.size()) ? rec.checkpoints[j + 1].step : cp.step;
    CheckpointCommit cc;
    cc.state_root = state_bytes_tree(as_view(cp.state_bytes), rec.bulk_arity).root();
    cc.slice_root = schedule_rows_tree(rec.schedule, cp.step, next_step, rec.bulk_arity).root();
    cc.aux_root = leaf_digest(as_view(cp.aux_bytes));
    cc.combined = checkpoint_combined(cp.step, cc.state_root, cc.slice_root, cc.aux_root);
    leaf_values.push_back(cc.combined);
    rec.commits.push_back(cc);
  }
  rec.checkpoint_tree = build_tree_from_digests(leaf_values, kCheckpointTreeArity);
  rec.h5 = rec.checkpoint_tree.root();
  std::vector<Digest> cats{rec.h1, rec.h2, rec.h3, rec.h4, rec.h5};
  rec.root = internal_digest(cats);
}

void check_common_inputs(const TrainConfig& cfg, std::uint64_t steps,
                         const DatasetManifest& manifest, const BatchSchedule& schedule,
                         std::uint16_t bulk_arity) {
  cfg.validate();
  if (steps < 1) raise(Errc::invalid_argument, "step count must be >= 1");
  if (schedule.steps != steps || schedule.batch_size != cfg.batch_size)
    raise(Errc::invalid_argument, "schedule does not match the training configuration");
  if (manifest.size < 1) raise(Errc::invalid_argument, "manifest must not be empty");
  if (bulk_arity < kMinArity || bulk_arity > kMaxArity)
    raise(Errc::invalid_argument, "tree arity out of range");
  for (std::uint64_t idx : schedule.indices)
    if (idx < 1 || idx > manifest.size)
      raise(Errc::invalid_argument, "schedule references an index outside the dataset");
}

AttestationRecord make_base(const TrainConfig& cfg, std::uint64_t steps,
                            const DatasetManifest& manifest, const BatchSchedule& schedule,
                            std::uint16_t bulk_arity) {
  AttestationRecord rec;
  rec.bulk_arity = bulk_arity;
  rec.steps = steps;
  rec.batch_size = cfg.batch_size;
  rec.dataset_size = manifest.size;
  rec.param_count = cfg.arch.param_count();
  MetaFields f;
  f.bulk_arity = bulk_arity;
  f.steps = steps;
  f.batch_size = cfg.batch_size;
  f.dataset_size = manifest.size;
  f.param_count = rec.param_count;
  rec.meta = meta_bytes(f);
  rec.setup = cfg.setup_bytes();
  rec.trainer = cfg.trainer_bytes();
  rec.manifest = manifest;
  rec.schedule = schedule;
  return rec;
}

}  // namespace

AttestationRecord build_complete_record(const TrainConfig& cfg, std::uint64_t steps,
                                        const DatasetManifest& manifest,
                                        const BatchSchedule& schedule, BytesView initial_state,
                                        std::uint16_t bulk_arity) {
  check_common_inputs(cfg, steps, manifest, schedule, bulk_arity);
  if (initial_state.empty()) raise(Errc::invalid_argument, "initial state must not be empty");
  AttestationRecord rec = make_base(cfg, steps, manifest, schedule, bulk_arity);
  rec.mode = RecordMode::complete;
  rec.initial_state = Bytes(initial_state.begin(), initial_state.end());
  rebuild_commitments(rec);
  return rec;
}

AttestationRecord build_partial_record(const TrainConfig& cfg, std::uint64_t steps,
                                       const DatasetManifest& manifest,
                                       const BatchSchedule& schedule,
                                       std::vector<Checkpoint> checkpoints,
                                       std::uint16_t bulk_arity) {
  check_common_inputs(cfg, steps, manifest, schedule, bulk_arity);
  if (checkpoints.size() < 2)
    raise(Errc::invalid_argument, "partial record needs at least the initial and final checkpoint");
  if (checkpoints.front().step != 0)
    raise(Errc::invalid_argument, "first checkpoint must be at step 0");
  if (checkpoints.back().step != steps)
    raise(Errc::invalid_argument, "last checkpoint must be at the final step");
  for (std::size_t j = 0; j + 1 < checkpoints.size(); ++j)
    if (checkpoints[j].step >= checkpoints[j + 1].step)
      raise(Errc::invalid_argument, "checkpoint steps must be strictly increasing");
  const std::uint64_t n = cfg.arch.param_count();
  for (const Checkpoint& cp : checkpoints) {
    if (cp.state_bytes.size() < 16 || ByteReader(as_view(cp.state_bytes)).u64() != n)
      raise(Errc::invalid_argument, "checkpoint state does not match the architecture");
    if (cp.aux_bytes.size() != 8)
      raise(Errc::invalid_argument, "checkpoint aux state must be 8 bytes");
  }
  AttestationRecord rec = make_base(cfg, steps, manifest, schedule, bulk_arity);
  rec.mode = RecordMode::partial;
  rec.checkpoints = std::move(checkpoints);
  rebuild_commitments(rec);
  return rec;
}

void sign_record(AttestationRecord& rec, const KeyPair& kp) {
  rec.signed_root = sign_root(rec.root, kp);
  rec.is_signed = true;
}

namespace {
constexpr std::uint32_t kRecordMagic = 0x54414354;  // "TCAT" little-endian
constexpr std::uint32_t kBundleMagic = 0x42444354;  // "TCDB" little-endian
constexpr std::uint16_t kContainerVersion = 1;
}  // namespace

void write_record_file(const std::string& path, const AttestationRecord& rec) {
  ByteWriter w;
  w.u32(kRecordMagic);
  w.u16(kContainerVersion);
  w.u8(static_cast<std::uint8_t>(rec.mode));
  w.u64(rec.mode == RecordMode::partial ? rec.transitions() : 0);
  w.lp(rec.meta);
  w.lp(rec.setup);
  w.lp(rec.trainer);
  w.lp(rec.manifest.canonical_bytes());
  w.u64(rec.schedule.indices.size());
  for (std::uint64_t idx : rec.schedule.indices) w.u64(idx);
  if (rec.mode == RecordMode::complete) {
    w.lp(rec.initial_state);
  } else {
    w.u64(rec.checkpoints.size());
    for (const Checkpoint& cp : rec.checkpoints) {
      w.u64(cp.step);
      w.lp(cp.state_bytes);
      w.lp(cp.aux_bytes);
    }
  }
  w.u8(rec.is_signed ? 1 : 0);
  if (rec.is_signed) w.raw(rec.signed_root.wire_bytes());
  write_file(path, as_view(w.bytes()));
}

AttestationRecord read_record_file(const std::string& path) {
  Bytes data = read_file(path);
  ByteReader r(as_view(data));
  if (r.u32() != kRecordMagic) raise(Errc::format, "not a record file: " + path);
  if (r.u16() != kContainerVersion) raise(Errc::format, "unsupported record file version");
  std::uint8_t mode = r.u8();
  if (mode > 1) raise(Errc::format, "unknown record mode");
  std::uint64_t claimed_m = r.u64();

  AttestationRecord rec;
  rec.mode = static_cast<RecordMode>(mode);
  rec.meta = r.lp();
  rec.setup = r.lp();
  rec.trainer = r.lp();
  MetaFields f = parse_meta(as_view(rec.meta));
  rec.bulk_arity = f.bulk_arity;
  rec.steps = f.steps;
  rec.batch_size = f.batch_size;
  rec.dataset_size = f.dataset_size;
  rec.param_count = f.param_count;
  if (rec.bulk_arity < kMinArity || rec.bulk_arity > kMaxArity)
    raise(Errc::format, "tree arity out of range");

  rec.manifest = DatasetManifest::from_bytes(as_view(r.lp()));
  if (rec.manifest.size != rec.dataset_size)
    raise(Errc::format, "manifest size disagrees with metadata");

  std::uint64_t index_count = r.u64();
  if (rec.batch_size == 0 || index_count != rec.steps * rec.batch_size)
    raise(Errc::format, "schedule size disagrees with metadata");
  rec.schedule.steps = rec.steps;
  rec.schedule.batch_size = rec.batch_size;
  rec.schedule.indices.resize(static_cast<std::size_t>(index_count));
  for (std::uint64_t i = 0; i < index_count; ++i) rec.schedule.indices[i] = r.u64();

  if (rec.mode == RecordMode::complete) {
    if (claimed_m != 0) raise(Errc::format, "complete record cannot carry checkpoints");
    rec.initial_state = r.lp();
  } else {
    std::uint64_t count = r.u64();
    if (count < 2 || count != claimed_m + 1)
      raise(Errc::format, "checkpoint count disagrees with header");
    rec.checkpoints.resize(static_cast<std::size_t>(count));
    std::uint64_t prev = 0;
    for (std::uint64_t j = 0; j < count; ++j) {
      Checkpoint& cp = rec.checkpoints[j];
      cp.step = r.u64();
      cp.state_bytes = r.lp();
      cp.aux_bytes = r.lp();
      if (j == 0 && cp.step != 0) raise(Errc::format, "first checkpoint must be at step 0");
      if (j > 0 && cp.step <= prev) raise(Errc::format, "checkpoint steps must increase");
      prev = cp.step;
    }
    if (rec.checkpoints.back().step != rec.steps)
      raise(Errc::format, "last checkpoint must be at the final step");
  }
  if (r.u8() == 1) {
    rec.signed_root = SignedRoot::from_wire(r.raw(SignedRoot::kWireSize));
    rec.is_signed = true;
  }
  r.expect_done();
  rebuild_commitments(rec);
  return rec;
}

DisclosureBundle build_disclosure_bundle(const AttestationRecord& rec,
                                         std::span<const Bytes> payloads,
                                         std::span<const std::uint64_t> sampled_transitions) {
  if (rec.mode != RecordMode::partial)
    raise(Errc::invalid_argument, "disclosure bundles require a partial record");
  if (!rec.is_signed) raise(Errc::invalid_argument, "record must be signed before disclosure");
  if (payloads.size() != rec.dataset_size)
    raise(Errc::invalid_argument, "payload count does not match the record's dataset size");
  const std::uint64_t m = rec.transitions();

  std::set<std::uint64_t> wanted(sampled_transitions.begin(), sampled_transitions.end());
  if (wanted.empty()) raise(Errc::invalid_argument, "no transitions sampled");
  if (wanted.size() != sampled_transitions.size())
    raise(Errc::invalid_argument, "sampled transitions must be distinct");
  for (std::uint64_t j : wanted)
    if (j < 1 || j > m) raise(Errc::invalid_argument, "sampled transition out of range");

  DisclosureBundle b;
  b.bulk_arity = rec.bulk_arity;
  b.transitions_total = m;
  b.meta = rec.meta;
  b.setup = rec.setup;
  b.trainer = rec.trainer;
  b.h4 = rec.h4;
  b.h5 = rec.h5;
  b.signed_root = rec.signed_root;

  std::set<std::uint64_t> cp_ordinals;
  std::set<std::uint64_t> item_indices;
  for (std::uint64_t j : wanted) {
    cp_ordinals.insert(j - 1);
    cp_ordinals.insert(j);
    DisclosureBundle::TransitionSlice slice;
    slice.transition = j;
    const std::uint64_t first = rec.checkpoints[static_cast<std::size_t>(j - 1)].step;
    const std::uint64_t last = rec.checkpoints[static_cast<std::size_t>(j)].step;
    for (std::uint64_t t = first; t < last; ++t)
      for (std::uint64_t idx : rec.schedule.row(t)) {
        slice.indices.push_back(idx);
        item_indices.insert(idx);
      }
    b.slices.push_back(std::move(slice));
  }

  for (std::uint64_t ord : cp_ordinals) {
    const Checkpoint& cp = rec.checkpoints[static_cast<std::size_t>(ord)];
    DisclosureBundle::CheckpointProof proof;
    proof.ordinal = ord;
    proof.step = cp.step;
    proof.state_bytes = cp.state_bytes;
    proof.aux_bytes = cp.aux_bytes;
    proof.slice_root = rec.commits[static_cast<std::size_t>(ord)].slice_root;
    proof.path = audit_path(rec.checkpoint_tree, ord);
    b.checkpoints.push_back(std::move(proof));
  }

  for (std::uint64_t idx : item_indices) {
    DisclosureBundle::Item item;
    item.index = idx;
    item.payload = payloads[static_cast<std::size_t>(idx - 1)];
    item.manifest_path = audit_path(rec.manifest_tree, idx - 1);
    b.items.push_back(std::move(item));
  }
  return b;
}

void write_bundle_file(const std::string& path, const DisclosureBundle& b) {
  ByteWriter w;
  w.u32(kBundleMagic);
  w.u16(kContainerVersion);
  w.u16(b.bulk_arity);
  w.u64(b.transitions_total);
  w.lp(b.meta);
  w.lp(b.setup);
  w.lp(b.trainer);
  w.raw(b.h4.view());
  w.raw(b.h5.view());
  w.u64(b.items.size());
  for (const DisclosureBundle::Item& item : b.items) {
    w.u64(item.index);
    w.lp(item.payload);
    w.lp(item.manifest_path.wire_bytes());
  }
  w.u64(b.checkpoints.size());
  for (const DisclosureBundle::CheckpointProof& cp : b.checkpoints) {
    w.u64(cp.ordinal);
    w.u64(cp.step);
    w.lp(cp.state_bytes);
    w.lp(cp.aux_bytes);
    w.raw(cp.slice_root.view());
    w.lp(cp.path.wire_bytes());
  }
  w.u64(b.slices.size());
  for (const DisclosureBundle::TransitionSlice& s : b.slices) {
    w.u64(s.transition);
    w.u64(s.indices.size());
    for (std::uint64_t idx : s.indices) w.u64(idx);
  }
  w.raw(b.signed_root.wire_bytes());
  write_file(path, as_view(w.bytes()));
}

DisclosureBundle read_bundle_file(const std::string& path) {
  Bytes data = read_file(path);
  ByteReader r(as_view(data));
  if (r.u32() != kBundleMagic) raise(Errc::format, "not a disclosure bundle: " + path);
  if (r.u16() != kContainerVersion) raise(Errc::format, "unsupported bundle version");
  DisclosureBundle b;
  b.bulk_arity = r.u16();
  b.transitions_total = r.u64();
  b.meta = r.lp();
  b.setup = r.lp();
  b.trainer = r.lp();
  BytesView v = r.raw(32);
  std::copy(v.begin(), v.end(), b.h4.bytes.begin());
  v = r.raw(32);
  std::copy(v.begin(), v.end(), b.h5.bytes.begin());
  std::uint64_t items = r.u64();
  b.items.resize(static_cast<std::size_t>(items));
  for (auto& item : b.items) {
    item.index = r.u64();
    item.payload = r.lp();
    item.manifest_path = AuditPath::from_wire(as_view(r.lp()));
  }
  std::uint64_t cps = r.u64();
  b.checkpoints.resize(static_cast<std::size_t>(cps));
  for (auto& cp : b.checkpoints) {
    cp.ordinal = r.u64();
    cp.step = r.u64();
    cp.state_bytes = r.lp();
    cp.aux_bytes = r.lp();
    v = r.raw(32);
    std::copy(v.begin(), v.end(), cp.slice_root.bytes.begin());
    cp.path = AuditPath::from_wire(as_view(r.lp()));
  }
  std::uint64_t slices = r.u64();
  b.slices.resize(static_cast<std::size_t>(slices));
  for (auto& s : b.slices) {
    s.transition = r.u64();
    std::uint64_t count = r.u64();
    if (count * 8 > r.remaining()) raise(Errc::format, "slice index count out of range");
    s.indices.resize(static_cast<std::size_t>(count));
    for (std::uint64_t i = 0; i < count; ++i) s.indices[i] = r.u64();
  }
  b.signed_root = SignedRoot::from_wire(r.raw(SignedRoot::kWireSize));
  r.expect_done();
  return b;
}

StorageEstimate estimate_storage(std::uint64_t param_count, std::uint64_t checkpoint_count,
                                 std::uint32_t hash_arity, OptimizerKind optimizer,
                                 std::uint64_t bytes_per_param, std::uint64_t digest_size) {
  if (param_count < 1) raise(Errc::invalid_argument, "parameter count must be >= 1");
  if (hash_arity < kMinArity || hash_arity > kMaxArity)
    raise(Errc::invalid_argument, "tree arity out of range");
  const std::uint64_t factor = optimizer == OptimizerKind::sgd ? 1 : 2;
  StorageEstimate e;
  e.per_checkpoint_payload = factor * param_count * bytes_per_param;
  e.per_checkpoint_tree = factor * node_count(param_count, hash_arity) * digest_size;
  e.penultimate_level = ((param_count + hash_arity - 1) / hash_arity) * digest_size;
  e.total_exact = checkpoint_count * (e.per_checkpoint_payload + e.per_checkpoint_tree);
  e.total_bound = 2 * checkpoint_count * e.per_checkpoint_payload;
  return e;
}

}  // namespace tcat
