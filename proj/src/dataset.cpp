#include "dataset.hpp"

#include <algorithm>
#include <numeric>

#include "error.hpp"
#include "prng.hpp"

namespace tcat {

Bytes encode_payload(std::span<const float> input, std::span<const float> target) {
  ByteWriter w;
  w.u64(input.size());
  for (float f : input) w.f32(f);
  w.u64(target.size());
  for (float f : target) w.f32(f);
  return w.take();
}

Sample decode_payload(BytesView payload) {
  ByteReader r(payload);
  Sample s;
  std::uint64_t ni = r.u64();
  if (ni * 4 > r.remaining()) raise(Errc::format, "payload input dim out of range");
  s.input.resize(ni);
  for (std::uint64_t i = 0; i < ni; ++i) s.input[i] = r.f32();
  std::uint64_t nt = r.u64();
  if (nt * 4 > r.remaining()) raise(Errc::format, "payload target dim out of range");
  s.target.resize(nt);
  for (std::uint64_t i = 0; i < nt; ++i) s.target[i] = r.f32();
  r.expect_done();
  return s;
}

const Digest& DatasetManifest::digest_of(std::uint64_t index) const {
  if (index < 1 || index > size) raise(Errc::invalid_argument, "manifest index out of range");
  return digests[static_cast<std::size_t>(index - 1)];
}

Bytes DatasetManifest::entry_leaf(std::uint64_t index) const {
  ByteWriter w;
  w.u64(index);
  w.raw(digest_of(index).view());
  return w.take();
}

Bytes DatasetManifest::canonical_bytes() const {
  ByteWriter w;
  w.u64(size);
  for (const Digest& d : digests) w.raw(d.view());
  return w.take();
}

DatasetManifest DatasetManifest::from_bytes(BytesView data) {
  ByteReader r(data);
  DatasetManifest m;
  m.size = r.u64();
  if (m.size * 32 != r.remaining()) raise(Errc::format, "manifest size does not match digest count");
  m.digests.resize(m.size);
  for (std::uint64_t i = 0; i < m.size; ++i) {
    BytesView v = r.raw(32);
    std::copy(v.begin(), v.end(), m.digests[i].bytes.begin());
  }
  r.expect_done();
  return m;
}

DatasetManifest build_manifest(std::span<const Bytes> payloads) {
  if (payloads.empty()) raise(Errc::invalid_argument, "dataset must not be empty");
  DatasetManifest m;
  m.size = payloads.size();
  m.digests.reserve(payloads.size());
  for (const Bytes& p : payloads) m.digests.push_back(sha256(as_view(p)));
  return m;
}

std::vector<std::uint64_t> verify_item_hashes(
    const DatasetManifest& manifest,
    std::span<const std::pair<std::uint64_t, Bytes>> disclosed) {
  std::vector<std::uint64_t> bad;
  for (const auto& [index, payload] : disclosed) {
    if (index < 1 || index > manifest.size) {
      bad.push_back(index);
      continue;
    }
    if (sha256(as_view(payload)) != manifest.digests[static_cast<std::size_t>(index - 1)])
      bad.push_back(index);
  }
  return bad;
}

std::span<const std::uint64_t> BatchSchedule::row(std::uint64_t t) const {
  if (t >= steps) raise(Errc::invalid_argument, "schedule row out of range");
  return std::span<const std::uint64_t>(indices)
      .subspan(static_cast<std::size_t>(t * batch_size), static_cast<std::size_t>(batch_size));
}

Bytes BatchSchedule::row_leaf(std::uint64_t t) const {
  ByteWriter w;
  for (std::uint64_t idx : row(t)) w.u64(idx);
  return w.take();
}

namespace {

void fisher_yates(std::vector<std::uint64_t>& perm, Splitmix64& rng) {
  for (std::size_t j = perm.size() - 1; j >= 1; --j) {
    std::size_t i = static_cast<std::size_t>(rng.below(j + 1));
    std::swap(perm[j], perm[i]);
  }
}

}  // namespace

BatchSchedule batch_schedule(std::uint64_t shuffle_seed, std::uint64_t dataset_size,
                             std::uint64_t batch_size, std::uint64_t steps) {
  if (dataset_size < 1) raise(Errc::invalid_argument, "dataset size must be >= 1");
  if (batch_size < 1 || batch_size > dataset_size)
    raise(Errc::invalid_argument, "batch size must be in [1, dataset size]");
  if (steps < 1) raise(Errc::invalid_argument, "step count must be >= 1");

  BatchSchedule sched;
  sched.steps = steps;
  sched.batch_size = batch_size;
  const std::uint64_t need = steps * batch_size;
  sched.indices.reserve(static_cast<std::size_t>(need));

  Splitmix64 rng(shuffle_seed);
  std::vector<std::uint64_t> perm(static_cast<std::size_t>(dataset_size));
  std::size_t pos = perm.size();  // forces a shuffle on first use
  while (sched.indices.size() < need) {
    if (pos == perm.size()) {
      std::iota(perm.begin(), perm.end(), std::uint64_t{1});
      if (perm.size() > 1) fisher_yates(perm, rng);
      pos = 0;
    }
    sched.indices.push_back(perm[pos++]);
  }
  return sched;
}

std::uint64_t shuffle_state_at(std::uint64_t shuffle_seed, std::uint64_t dataset_size,
                               std::uint64_t batch_size, std::uint64_t step) {
  if (dataset_size < 1) raise(Errc::invalid_argument, "dataset size must be >= 1");
  // Rows before `step` consume step*b indices; a permutation of d indices is
  // (possibly partially) consumed per epoch, and each shuffle draws d-1
  // values from the stream.
  const std::uint64_t consumed = step * batch_size;
  const std::uint64_t epochs = (consumed + dataset_size - 1) / dataset_size;
  Splitmix64 rng(shuffle_seed);
  if (dataset_size > 1)
    for (std::uint64_t e = 0; e < epochs * (dataset_size - 1); ++e) rng.next();
  return rng.state();
}

namespace {
constexpr std::uint32_t kDatasetMagic = 0x53444354;  // "TCDS" little-endian
constexpr std::uint16_t kDatasetVersion = 1;
}  // namespace

void write_dataset_file(const std::string& path, std::span<const Bytes> payloads) {
  ByteWriter w;
  w.u32(kDatasetMagic);
  w.u16(kDatasetVersion);
  w.u64(payloads.size());
  for (const Bytes& p : payloads) w.lp(p);
  write_file(path, as_view(w.bytes()));
}

std::vector<Bytes> read_dataset_file(const std::string& path) {
  Bytes data = read_file(path);
  ByteReader r(as_view(data));
  if (r.u32() != kDatasetMagic) raise(Errc::format, "not a dataset file: " + path);
  if (r.u16() != kDatasetVersion) raise(Errc::format, "unsupported dataset file version");
  std::uint64_t count = r.u64();
  std::vector<Bytes> payloads;
  payloads.reserve(static_cast<std::size_t>(count));
  for (std::uint64_t i = 0; i < count; ++i) payloads.push_back(r.lp());
  r.expect_done();
  return payloads;
}

std::vector<Bytes> generate_synthetic_payloads(std::uint64_t count, std::uint64_t input_dim,
                                               std::uint64_t target_dim, bool classification,
                                               std::uint64_t seed) {
  if (count < 1 || input_dim < 1 || target_dim < 1)
    raise(Errc::invalid_argument, "synthetic data dimensions must be >= 1");
  std::vector<Bytes> out;
  out.reserve(static_cast<std::size_t>(count));
  Splitmix64 rng(seed);
  std::vector<float> input(static_cast<std::size_t>(input_dim));
  std::vector<float> target(static_cast<std::size_t>(target_dim));
  for (std::uint64_t i = 0; i < count; ++i) {
    for (float& v : input) v = rng.next_unit_f32() * 2.0f - 1.0f;
    if (classification) {
      std::fill(target.begin(), target.end(), 0.0f);
      target[static_cast<std::size_t>(rng.below(target_dim))] = 1.0f;
    } else {
      for (float& v : target) v = rng.next_unit_f32() * 2.0f - 1.0f;
    }
    out.push_back(encode_payload(input, target));
  }
  return out;
}

}  // namespace tcat
