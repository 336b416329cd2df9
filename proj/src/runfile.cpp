#include "runfile.hpp"

#include <algorithm>
#include <map>

#include "error.hpp"

namespace tcat {

namespace {

Bytes le64_bytes(std::uint64_t v) {
  ByteWriter w;
  w.u64(v);
  return w.take();
}

// Decoded-sample cache over a payload list.
struct PayloadSamples {
  explicit PayloadSamples(std::span<const Bytes> payloads) : payloads_(payloads) {}

  const Sample& get(std::uint64_t index) {
    auto it = cache_.find(index);
    if (it == cache_.end()) {
      if (index < 1 || index > payloads_.size())
        raise(Errc::invalid_argument, "dataset index out of range");
      it = cache_
               .emplace(index,
                        decode_payload(as_view(payloads_[static_cast<std::size_t>(index - 1)])))
               .first;
    }
    return it->second;
  }

  SampleLookup lookup() {
    return [this](std::uint64_t index) -> const Sample& { return get(index); };
  }

  std::span<const Bytes> payloads_;
  std::map<std::uint64_t, Sample> cache_;
};

}  // namespace

TrainRun run_training(const TrainConfig& cfg, std::uint64_t steps,
                      std::span<const Bytes> payloads, std::uint64_t checkpoint_every) {
  cfg.validate();
  if (steps < 1) raise(Errc::invalid_argument, "step count must be >= 1");
  if (payloads.empty()) raise(Errc::invalid_argument, "dataset must not be empty");

  TrainRun run;
  run.config = cfg;
  run.steps = steps;
  run.manifest = build_manifest(payloads);
  run.schedule = batch_schedule(cfg.shuffle_seed, payloads.size(), cfg.batch_size, steps);

  PayloadSamples samples(payloads);
  SampleLookup lookup = samples.lookup();

  ModelState state = init_model(cfg.arch, cfg.init_seed, cfg.init_scale, cfg.optimizer);
  run.initial_state = state.canonical_bytes(cfg.optimizer);

  auto aux_at = [&](std::uint64_t step) {
    return le64_bytes(shuffle_state_at(cfg.shuffle_seed, payloads.size(), cfg.batch_size, step));
  };
  run.checkpoints.push_back({0, run.initial_state, aux_at(0)});

  for (std::uint64_t t = 0; t < steps; ++t) {
    state = train_range(std::move(state), run.schedule.row(t), t, lookup, cfg);
    const std::uint64_t done = t + 1;
    if (done == steps || (checkpoint_every > 0 && done % checkpoint_every == 0))
      run.checkpoints.push_back({done, state.canonical_bytes(cfg.optimizer), aux_at(done)});
  }
  run.final_state = run.checkpoints.back().state_bytes;
  return run;
}

namespace {
constexpr std::uint32_t kRunMagic = 0x4E524354;    // "TCRN" little-endian
constexpr std::uint32_t kModelMagic = 0x534D4354;  // "TCMS" little-endian
constexpr std::uint16_t kRunVersion = 1;
}  // namespace

void write_run_file(const std::string& path, const TrainRun& run) {
  ByteWriter w;
  w.u32(kRunMagic);
  w.u16(kRunVersion);
  w.u64(run.steps);
  w.lp(run.config.setup_bytes());
  w.lp(run.config.trainer_bytes());
  w.lp(run.manifest.canonical_bytes());
  w.u64(run.schedule.indices.size());
  for (std::uint64_t idx : run.schedule.indices) w.u64(idx);
  w.lp(run.initial_state);
  w.lp(run.final_state);
  w.u64(run.checkpoints.size());
  for (const Checkpoint& cp : run.checkpoints) {
    w.u64(cp.step);
    w.lp(cp.state_bytes);
    w.lp(cp.aux_bytes);
  }
  write_file(path, as_view(w.bytes()));
}

TrainRun read_run_file(const std::string& path) {
  Bytes data = read_file(path);
  ByteReader r(as_view(data));
  if (r.u32() != kRunMagic) raise(Errc::format, "not a run file: " + path);
  if (r.u16() != kRunVersion) raise(Errc::format, "unsupported run file version");
  TrainRun run;
  run.steps = r.u64();
  Bytes setup = r.lp();
  Bytes trainer = r.lp();
  run.config = TrainConfig::from_category_bytes(as_view(setup), as_view(trainer));
  run.manifest = DatasetManifest::from_bytes(as_view(r.lp()));
  std::uint64_t index_count = r.u64();
  if (index_count != run.steps * run.config.batch_size)
    raise(Errc::format, "schedule size disagrees with the configuration");
  run.schedule.steps = run.steps;
  run.schedule.batch_size = run.config.batch_size;
  run.schedule.indices.resize(static_cast<std::size_t>(index_count));
  for (std::uint64_t i = 0; i < index_count; ++i) run.schedule.indices[i] = r.u64();
  run.initial_state = r.lp();
  run.final_state = r.lp();
  std::uint64_t count = r.u64();
  if (count < 2) raise(Errc::format, "run file needs at least two checkpoints");
  run.checkpoints.resize(static_cast<std::size_t>(count));
  std::uint64_t prev = 0;
  for (std::uint64_t j = 0; j < count; ++j) {
    Checkpoint& cp = run.checkpoints[j];
    cp.step = r.u64();
    cp.state_bytes = r.lp();
    cp.aux_bytes = r.lp();
    if (j == 0 && cp.step != 0) raise(Errc::format, "first checkpoint must be at step 0");
    if (j > 0 && cp.step <= prev) raise(Errc::format, "checkpoint steps must increase");
    prev = cp.step;
  }
  if (run.checkpoints.back().step != run.steps)
    raise(Errc::format, "last checkpoint must be at the final step");
  r.expect_done();
  return run;
}

void write_model_file(const std::string& path, OptimizerKind kind, BytesView state_bytes) {
  ByteWriter w;
  w.u32(kModelMagic);
  w.u16(kRunVersion);
  w.u8(static_cast<std::uint8_t>(kind));
  w.lp(state_bytes);
  write_file(path, as_view(w.bytes()));
}

std::pair<OptimizerKind, Bytes> read_model_file(const std::string& path) {
  Bytes data = read_file(path);
  ByteReader r(as_view(data));
  if (r.u32() != kModelMagic) raise(Errc::format, "not a model file: " + path);
  if (r.u16() != kRunVersion) raise(Errc::format, "unsupported model file version");
  std::uint8_t kind = r.u8();
  if (kind > 2) raise(Errc::format, "unknown optimizer tag");
  Bytes state = r.lp();
  r.expect_done();
  return {static_cast<OptimizerKind>(kind), std::move(state)};
}

std::vector<Checkpoint> checkpoints_at_spacing(const TrainRun& run,
                                               std::span<const Bytes> payloads,
                                               std::uint64_t spacing) {
  if (spacing == 0) return run.checkpoints;

  std::vector<std::uint64_t> wanted;
  for (std::uint64_t s = 0; s < run.steps; s += spacing) wanted.push_back(s);
  wanted.push_back(run.steps);

  std::map<std::uint64_t, const Checkpoint*> recorded;
  for (const Checkpoint& cp : run.checkpoints) recorded.emplace(cp.step, &cp);

  const TrainConfig& cfg = run.config;
  const std::uint64_t d = run.manifest.size;
  auto aux_at = [&](std::uint64_t step) {
    return le64_bytes(shuffle_state_at(cfg.shuffle_seed, d, cfg.batch_size, step));
  };

  PayloadSamples samples(payloads);
  SampleLookup lookup = samples.lookup();

  std::vector<Checkpoint> out;
  out.reserve(wanted.size());
  ModelState cur;
  std::uint64_t cur_step = 0;
  bool have_cur = false;

  for (std::uint64_t w : wanted) {
    auto hit = recorded.find(w);
    if (hit != recorded.end()) {
      out.push_back(*hit->second);
      cur = ModelState::from_bytes(as_view(hit->second->state_bytes), cfg.optimizer);
      cur_step = w;
      have_cur = true;
      continue;
    }
    if (!have_cur || cur_step > w) {
      // Nearest recorded checkpoint at or before the wanted step.
      auto it = recorded.upper_bound(w);
      if (it == recorded.begin())
        raise(Errc::internal, "no checkpoint precedes the wanted step");
      --it;
      cur = ModelState::from_bytes(as_view(it->second->state_bytes), cfg.optimizer);
      cur_step = it->first;
      have_cur = true;
    }
    if (payloads.empty())
      raise(Errc::invalid_argument,
            "materializing checkpoints at this spacing requires the dataset for replay");
    std::span<const std::uint64_t> rows =
        std::span<const std::uint64_t>(run.schedule.indices)
            .subspan(static_cast<std::size_t>(cur_step * cfg.batch_size),
                     static_cast<std::size_t>((w - cur_step) * cfg.batch_size));
    cur = train_range(std::move(cur), rows, cur_step, lookup, cfg);
    cur_step = w;
    out.push_back({w, cur.canonical_bytes(cfg.optimizer), aux_at(w)});
  }
  return out;
}

}  // namespace tcat
