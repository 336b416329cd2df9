#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bytes.hpp"
#include "dataset.hpp"
#include "detnet.hpp"
#include "hash.hpp"
#include "merkle.hpp"
#include "sign.hpp"

namespace tcat {

enum class RecordMode : std::uint8_t { complete = 0, partial = 1 };

// Category-1 metadata. Mode and checkpoint count are deliberately not in
// here: both record modes built from the same run must embed identical
// category 1..4 roots, and the checkpoint count is already bound by the
// category-5 tree shape.
struct MetaFields {
  std::uint16_t version = 1;
  std::uint8_t hash_alg = 1;  // SHA-256
  std::uint8_t sig_alg = 1;   // Ed25519
  std::uint16_t bulk_arity = 16;
  std::uint64_t steps = 0;         // k
  std::uint64_t batch_size = 0;    // b
  std::uint64_t dataset_size = 0;  // d
  std::uint64_t param_count = 0;   // n
};

Bytes meta_bytes(const MetaFields& f);
MetaFields parse_meta(BytesView data);

// A stored checkpoint: step index i_j, canonical model state bytes at that
// step, and auxiliary replay state (the 8-byte shuffle PRNG state once every
// earlier row has been drawn).
struct Checkpoint {
  std::uint64_t step = 0;
  Bytes state_bytes;
  Bytes aux_bytes;
};

// Subtree roots for one checkpoint's category-5 entry.
struct CheckpointCommit {
  Digest state_root;  // over 4-byte chunks of the state bytes
  Digest slice_root;  // over the schedule rows from this step to the next checkpoint
  Digest aux_root;    // single leaf over the aux bytes
  Digest combined;    // H(0x01 || step || state_root || slice_root || aux_root)
};

// Sentinel leaf for the empty schedule slice of the final checkpoint.
constexpr std::uint8_t kEmptySliceSentinel = 0xEE;
constexpr std::size_t kStateChunkBytes = 4;
// Checkpoint membership trees are binary regardless of the bulk arity.
constexpr std::uint32_t kCheckpointTreeArity = 2;

Digest checkpoint_combined(std::uint64_t step, const Digest& state_root,
                           const Digest& slice_root, const Digest& aux_root);

struct AttestationRecord {
  RecordMode mode = RecordMode::complete;
  std::uint16_t bulk_arity = 16;
  std::uint64_t steps = 0, batch_size = 0, dataset_size = 0, param_count = 0;

  Bytes meta, setup, trainer;           // category 1..3 byte strings
  DatasetManifest manifest;             // category 4
  BatchSchedule schedule;               // category 5 source (both modes)
  Bytes initial_state;                  // category 6 (complete mode)
  std::vector<Checkpoint> checkpoints;  // partial mode, m+1 entries

  // Derived commitments, rebuilt from the fields above on build and on load.
  Digest h1, h2, h3, h4, h5, h6;
  MerkleTree manifest_tree;
  MerkleTree schedule_tree;               // complete mode
  MerkleTree initial_state_tree;          // complete mode
  std::vector<CheckpointCommit> commits;  // partial mode
  MerkleTree checkpoint_tree;             // partial mode
  Digest root;

  SignedRoot signed_root;
  bool is_signed = false;

  std::uint64_t checkpoint_count() const { return checkpoints.size(); }
  // Number of sampleable transitions (m); partial mode only.
  std::uint64_t transitions() const { return checkpoints.empty() ? 0 : checkpoints.size() - 1; }
};

AttestationRecord build_complete_record(const TrainConfig& cfg, std::uint64_t steps,
                                        const DatasetManifest& manifest,
                                        const BatchSchedule& schedule, BytesView initial_state,
                                        std::uint16_t bulk_arity = 16);

AttestationRecord build_partial_record(const TrainConfig& cfg, std::uint64_t steps,
                                       const DatasetManifest& manifest,
                                       const BatchSchedule& schedule,
                                       std::vector<Checkpoint> checkpoints,
                                       std::uint16_t bulk_arity = 16);

void sign_record(AttestationRecord& rec, const KeyPair& kp);

// Record container file (magic "TCAT"). Commitment trees are rebuilt on
// load; the embedded signature block is kept as claimed, so verification can
// report a root mismatch instead of the loader rejecting it.
void write_record_file(const std::string& path, const AttestationRecord& rec);
AttestationRecord read_record_file(const std::string& path);

// Self-contained evidence for a set of sampled transitions out of a signed
// partial record: category 1..3 bytes, the category 4/5 roots, disclosed
// items with manifest membership paths, disclosed checkpoints with
// category-5 membership paths, the schedule slices, and the signature.
struct DisclosureBundle {
  std::uint16_t bulk_arity = 16;
  std::uint64_t transitions_total = 0;  // m
  Bytes meta, setup, trainer;
  Digest h4, h5;

  struct Item {
    std::uint64_t index = 0;  // 1-based dataset index
    Bytes payload;
    AuditPath manifest_path;
  };
  std::vector<Item> items;

  struct CheckpointProof {
    std::uint64_t ordinal = 0;  // leaf position j in the checkpoint tree
    std::uint64_t step = 0;
    Bytes state_bytes;
    Bytes aux_bytes;
    Digest slice_root;  // claimed; recomputed from rows when they are disclosed
    AuditPath path;
  };
  std::vector<CheckpointProof> checkpoints;

  struct TransitionSlice {
    std::uint64_t transition = 0;        // j in [1, m]
    std::vector<std::uint64_t> indices;  // rows i_{j-1}..i_j-1, row-major
  };
  std::vector<TransitionSlice> slices;

  SignedRoot signed_root;
};

DisclosureBundle build_disclosure_bundle(const AttestationRecord& rec,
                                         std::span<const Bytes> payloads,
                                         std::span<const std::uint64_t> sampled_transitions);

void write_bundle_file(const std::string& path, const DisclosureBundle& bundle);
DisclosureBundle read_bundle_file(const std::string& path);

// Storage cost model for a partial record, in bytes. Momentum and Adam
// checkpoints pay the auxiliary-vector factor of two; the simple bound is
// 2 * m * per-checkpoint payload.
struct StorageEstimate {
  std::uint64_t per_checkpoint_payload = 0;
  std::uint64_t per_checkpoint_tree = 0;
  // First tree level above the parameter chunks, for one weight tree:
  // ceil(n / arity) digests.
  std::uint64_t penultimate_level = 0;
  std::uint64_t total_exact = 0;
  std::uint64_t total_bound = 0;
};

StorageEstimate estimate_storage(std::uint64_t param_count, std::uint64_t checkpoint_count,
                                 std::uint32_t hash_arity, OptimizerKind optimizer,
                                 std::uint64_t bytes_per_param = 4,
                                 std::uint64_t digest_size = 32);

}  // namespace tcat
