#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bytes.hpp"
#include "detnet.hpp"
#include "hash.hpp"

namespace tcat {

// Canonical sample payload: u64 input dim, inputs, u64 target dim, targets.
Bytes encode_payload(std::span<const float> input, std::span<const float> target);
Sample decode_payload(BytesView payload);

// The numbering commitment: item i (1-based) maps to the digest of its
// payload. The manifest entry that gets hashed into the tree binds the index
// to the digest, so a membership proof pins both.
struct DatasetManifest {
  std::uint64_t size = 0;
  std::vector<Digest> digests;  // digests[i-1] belongs to item i

  const Digest& digest_of(std::uint64_t index) const;
  Bytes entry_leaf(std::uint64_t index) const;  // u64 index, then the digest
  Bytes canonical_bytes() const;
  static DatasetManifest from_bytes(BytesView data);
};

DatasetManifest build_manifest(std::span<const Bytes> payloads);

// Returns the 1-based indices of disclosed items whose payload hash does not
// match the manifest (empty means all match). Out-of-range indices are
// reported as mismatches.
std::vector<std::uint64_t> verify_item_hashes(
    const DatasetManifest& manifest,
    std::span<const std::pair<std::uint64_t, Bytes>> disclosed);

// Batch schedule: k rows of b 1-based indices, drawn from per-epoch
// Fisher-Yates shuffles of [1..d] seeded with shuffle_seed; a partially
// consumed permutation carries over into the next row.
struct BatchSchedule {
  std::uint64_t steps = 0;       // k
  std::uint64_t batch_size = 0;  // b
  std::vector<std::uint64_t> indices;  // steps*batch_size, row-major

  std::span<const std::uint64_t> row(std::uint64_t t) const;
  Bytes row_leaf(std::uint64_t t) const;  // b little-endian u64
};

BatchSchedule batch_schedule(std::uint64_t shuffle_seed, std::uint64_t dataset_size,
                             std::uint64_t batch_size, std::uint64_t steps);

// Shuffle-stream PRNG state once every row before `step` has been drawn,
// i.e. after ceil(step*b/d) epoch shuffles. step = 0 gives the seed itself.
std::uint64_t shuffle_state_at(std::uint64_t shuffle_seed, std::uint64_t dataset_size,
                               std::uint64_t batch_size, std::uint64_t step);

// Dataset container file (magic "TCDS"): u32 magic, u16 version, u64 count,
// then length-prefixed payloads in index order.
void write_dataset_file(const std::string& path, std::span<const Bytes> payloads);
std::vector<Bytes> read_dataset_file(const std::string& path);

// Deterministic synthetic data. Inputs uniform in [-1, 1); regression
// targets likewise; classification targets one-hot.
std::vector<Bytes> generate_synthetic_payloads(std::uint64_t count, std::uint64_t input_dim,
                                               std::uint64_t target_dim, bool classification,
                                               std::uint64_t seed);

}  // namespace tcat
