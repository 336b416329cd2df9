#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "attest.hpp"
#include "bytes.hpp"
#include "dataset.hpp"
#include "detnet.hpp"

namespace tcat {

// Everything a training run produces that attestation needs later: the
// configuration, the data commitment, the schedule, the endpoint states and
// whatever checkpoints were recorded along the way.
struct TrainRun {
  TrainConfig config;
  std::uint64_t steps = 0;
  DatasetManifest manifest;
  BatchSchedule schedule;
  Bytes initial_state;
  Bytes final_state;
  std::vector<Checkpoint> checkpoints;  // always includes steps 0 and `steps`
};

// Deterministic training over the payload list. checkpoint_every = 0 records
// only the initial and final checkpoints.
TrainRun run_training(const TrainConfig& cfg, std::uint64_t steps,
                      std::span<const Bytes> payloads, std::uint64_t checkpoint_every);

// Run container file (magic "TCRN").
void write_run_file(const std::string& path, const TrainRun& run);
TrainRun read_run_file(const std::string& path);

// Published model container (magic "TCMS"): optimizer tag plus the canonical
// state bytes.
void write_model_file(const std::string& path, OptimizerKind kind, BytesView state_bytes);
std::pair<OptimizerKind, Bytes> read_model_file(const std::string& path);

// Checkpoints at steps {0, spacing, 2*spacing, ..., steps}. Steps that were
// recorded in the run are reused; missing ones are materialized by replaying
// from the nearest earlier recorded checkpoint, which needs the payloads.
// spacing = 0 returns the recorded checkpoints unchanged.
std::vector<Checkpoint> checkpoints_at_spacing(const TrainRun& run,
                                               std::span<const Bytes> payloads,
                                               std::uint64_t spacing);

}  // namespace tcat
