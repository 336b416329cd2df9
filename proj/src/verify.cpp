#include "verify.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

#include "dataset.hpp"
#include "detnet.hpp"
#include "error.hpp"
#include "merkle.hpp"
#include "prng.hpp"

namespace tcat {

const char* failure_code_name(FailureCode c) {
  switch (c) {
    case FailureCode::none: return "None";
    case FailureCode::signature_invalid: return "SignatureInvalid";
    case FailureCode::tree_mismatch: return "TreeMismatch";
    case FailureCode::data_hash_mismatch: return "DataHashMismatch";
    case FailureCode::replay_mismatch: return "ReplayMismatch";
    case FailureCode::membership_fail: return "MembershipFail";
    case FailureCode::incomplete_disclosure: return "IncompleteDisclosure";
  }
  return "?";
}

namespace {

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

void add_pass(VerificationReport& rep, int number, const char* name) {
  rep.checks.push_back({number, name, true, FailureCode::none, ""});
}

void add_fail(VerificationReport& rep, int number, const char* name, FailureCode code,
              std::string detail) {
  rep.checks.push_back({number, name, false, code, one_line(std::move(detail))});
  rep.overall = false;
  if (rep.first_failure == FailureCode::none) rep.first_failure = code;
}

std::string join_indices(std::span<const std::uint64_t> v, std::size_t cap = 8) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size() && i < cap; ++i) {
    if (i) os << ',';
    os << v[i];
  }
  if (v.size() > cap) os << ",...";
  return os.str();
}

// Decoded-sample cache backing the SampleLookup used during replay.
class SampleCache {
 public:
  using PayloadFn = std::function<BytesView(std::uint64_t)>;
  explicit SampleCache(PayloadFn fn) : fn_(std::move(fn)) {}

  const Sample& get(std::uint64_t index) {
    auto it = cache_.find(index);
    if (it == cache_.end()) it = cache_.emplace(index, decode_payload(fn_(index))).first;
    return it->second;
  }

 private:
  PayloadFn fn_;
  std::map<std::uint64_t, Sample> cache_;
};

Bytes le64_bytes(std::uint64_t v) {
  ByteWriter w;
  w.u64(v);
  return w.take();
}

}  // namespace

AuditPlan sample_transitions(std::uint64_t transitions_total, std::uint64_t sample_count,
                             std::uint64_t verifier_seed) {
  if (transitions_total < 1) raise(Errc::invalid_argument, "no transitions to sample");
  if (sample_count < 1 || sample_count > transitions_total)
    raise(Errc::invalid_argument, "sample count must be in [1, transition count]");
  std::vector<std::uint64_t> arr(static_cast<std::size_t>(transitions_total));
  std::iota(arr.begin(), arr.end(), std::uint64_t{1});
  Splitmix64 rng(verifier_seed);
  for (std::uint64_t i = 0; i < sample_count; ++i) {
    std::uint64_t j = i + rng.below(transitions_total - i);
    std::swap(arr[static_cast<std::size_t>(i)], arr[static_cast<std::size_t>(j)]);
  }
  AuditPlan plan;
  plan.transitions_total = transitions_total;
  plan.sample_count = sample_count;
  plan.verifier_seed = verifier_seed;
  plan.sampled.assign(arr.begin(), arr.begin() + static_cast<std::size_t>(sample_count));
  std::sort(plan.sampled.begin(), plan.sampled.end());
  return plan;
}

std::string render_plan(const AuditPlan& plan) {
  std::ostringstream os;
  os << "tcat-plan v1\n";
  os << "m=" << plan.transitions_total << "\n";
  os << "v=" << plan.sample_count << "\n";
  os << "seed=" << plan.verifier_seed << "\n";
  os << "sampled=";
  for (std::size_t i = 0; i < plan.sampled.size(); ++i) {
    if (i) os << ',';
    os << plan.sampled[i];
  }
  os << "\n";
  return os.str();
}

AuditPlan parse_plan(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "tcat-plan v1")
    raise(Errc::format, "not an audit plan file");
  AuditPlan plan;
  bool got_m = false, got_v = false, got_seed = false, got_sampled = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) raise(Errc::format, "malformed plan line: " + line);
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    try {
      if (key == "m") {
        plan.transitions_total = std::stoull(val);
        got_m = true;
      } else if (key == "v") {
        plan.sample_count = std::stoull(val);
        got_v = true;
      } else if (key == "seed") {
        plan.verifier_seed = std::stoull(val);
        got_seed = true;
      } else if (key == "sampled") {
        std::istringstream vs(val);
        std::string tok;
        while (std::getline(vs, tok, ',')) plan.sampled.push_back(std::stoull(tok));
        got_sampled = true;
      } else {
        raise(Errc::format, "unknown plan key: " + key);
      }
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      raise(Errc::format, "malformed plan value: " + line);
    }
  }
  if (!got_m || !got_v || !got_seed || !got_sampled)
    raise(Errc::format, "plan file is missing fields");
  if (plan.sampled.size() != plan.sample_count)
    raise(Errc::format, "plan sample list does not match v");
  std::vector<std::uint64_t> sorted = plan.sampled;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    raise(Errc::format, "plan samples must be distinct");
  for (std::uint64_t j : sorted)
    if (j < 1 || j > plan.transitions_total) raise(Errc::format, "plan sample out of range");
  plan.sampled = std::move(sorted);
  return plan;
}

std::string VerificationReport::render() const {
  std::ostringstream os;
  os << "tcat-report v1\n";
  os << "mode=" << (mode == RecordMode::complete ? "complete" : "partial") << "\n";
  if (seeded) os << "verifier_seed=" << verifier_seed << "\n";
  if (mode == RecordMode::partial) {
    os << "sampled=";
    for (std::size_t i = 0; i < sampled.size(); ++i) {
      if (i) os << ',';
      os << sampled[i];
    }
    os << "\n";
  }
  for (const CheckResult& c : checks) {
    os << "check=" << c.number << " name=" << c.name << " result=" << (c.pass ? "pass" : "fail");
    if (!c.pass) os << " code=" << failure_code_name(c.code);
    if (!c.detail.empty()) os << " detail=" << c.detail;
    os << "\n";
  }
  for (const TransitionResult& t : transitions) {
    os << "transition=" << t.transition << " result=" << (t.pass ? "pass" : "fail");
    if (!t.pass) os << " code=" << failure_code_name(t.code);
    if (!t.detail.empty()) os << " detail=" << t.detail;
    os << "\n";
  }
  os << "overall=" << (overall ? "pass" : "fail") << "\n";
  os << "first_failure=" << failure_code_name(first_failure) << "\n";
  return os.str();
}

VerificationReport verify_complete(const AttestationRecord& rec, BytesView claimed_final_state,
                                   std::span<const Bytes> payloads, const PublicKey& pk) {
  if (rec.mode != RecordMode::complete)
    raise(Errc::invalid_argument, "record is not a complete record");
  VerificationReport rep;
  rep.mode = RecordMode::complete;
  rep.overall = true;

  // Check 1: the signature block must verify under the supplied key.
  if (!rec.is_signed) {
    add_fail(rep, 1, "signature", FailureCode::signature_invalid, "record carries no signature");
    return rep;
  }
  if (!verify_signed_root(rec.signed_root, pk)) {
    add_fail(rep, 1, "signature", FailureCode::signature_invalid,
             "signature does not verify under the supplied public key");
    return rep;
  }
  add_pass(rep, 1, "signature");

  // Check 2: recompute the category trees from the record contents and
  // compare with the signed root.
  if (rec.root != rec.signed_root.root) {
    add_fail(rep, 2, "commitments", FailureCode::tree_mismatch,
             "recomputed root does not match the signed root");
    return rep;
  }
  add_pass(rep, 2, "commitments");

  // Check 3: every dataset item must hash to its manifest digest.
  if (payloads.size() != rec.dataset_size) {
    add_fail(rep, 3, "data_hashes", FailureCode::data_hash_mismatch,
             "dataset has " + std::to_string(payloads.size()) + " items, record commits " +
                 std::to_string(rec.dataset_size));
    return rep;
  }
  {
    std::vector<std::pair<std::uint64_t, Bytes>> disclosed;
    disclosed.reserve(payloads.size());
    for (std::uint64_t i = 0; i < payloads.size(); ++i)
      disclosed.emplace_back(i + 1, payloads[static_cast<std::size_t>(i)]);
    std::vector<std::uint64_t> bad = verify_item_hashes(rec.manifest, disclosed);
    if (!bad.empty()) {
      add_fail(rep, 3, "data_hashes", FailureCode::data_hash_mismatch,
               "items do not match the manifest: " + join_indices(bad));
      return rep;
    }
  }
  add_pass(rep, 3, "data_hashes");

  // Check 4: full replay. The schedule, the initial state and every training
  // step must reproduce from the committed seeds, and the replayed final
  // state must equal the claimed one byte for byte.
  try {
    TrainConfig cfg = TrainConfig::from_category_bytes(as_view(rec.setup), as_view(rec.trainer));
    if (cfg.arch.param_count() != rec.param_count) {
      add_fail(rep, 4, "replay", FailureCode::replay_mismatch,
               "metadata parameter count disagrees with the architecture");
      return rep;
    }
    if (cfg.batch_size != rec.batch_size) {
      add_fail(rep, 4, "replay", FailureCode::replay_mismatch,
               "metadata batch size disagrees with the trainer configuration");
      return rep;
    }
    BatchSchedule expected =
        batch_schedule(cfg.shuffle_seed, rec.dataset_size, cfg.batch_size, rec.steps);
    if (expected.indices != rec.schedule.indices) {
      add_fail(rep, 4, "replay", FailureCode::replay_mismatch,
               "committed schedule does not match the seeded derivation");
      return rep;
    }
    ModelState f0 = init_model(cfg.arch, cfg.init_seed, cfg.init_scale, cfg.optimizer);
    if (f0.canonical_bytes(cfg.optimizer) != rec.initial_state) {
      add_fail(rep, 4, "replay", FailureCode::replay_mismatch,
               "committed initial state does not match the seeded initialization");
      return rep;
    }
    SampleCache cache([&payloads](std::uint64_t index) {
      return as_view(payloads[static_cast<std::size_t>(index - 1)]);
    });
    SampleLookup lookup = [&cache](std::uint64_t index) -> const Sample& {
      return cache.get(index);
    };
    ModelState fk = train_range(std::move(f0), rec.schedule.indices, 0, lookup, cfg);
    Bytes replayed = fk.canonical_bytes(cfg.optimizer);
    if (replayed.size() != claimed_final_state.size() ||
        !std::equal(replayed.begin(), replayed.end(), claimed_final_state.begin())) {
      add_fail(rep, 4, "replay", FailureCode::replay_mismatch,
               "replayed final state does not match the claimed final state");
      return rep;
    }
  } catch (const std::exception& e) {
    add_fail(rep, 4, "replay", FailureCode::replay_mismatch,
             std::string("replay failed: ") + e.what());
    return rep;
  }
  add_pass(rep, 4, "replay");
  return rep;
}

namespace {

struct BundleIndex {
  const DisclosureBundle* bundle = nullptr;
  MetaFields meta;
  TrainConfig cfg;
  std::map<std::uint64_t, const DisclosureBundle::Item*> items;            // by dataset index
  std::map<std::uint64_t, const DisclosureBundle::CheckpointProof*> cps;   // by ordinal
  std::map<std::uint64_t, const DisclosureBundle::TransitionSlice*> slices;  // by transition
};

// One sampled transition: membership, then data hashes, then replay.
TransitionResult check_transition(const BundleIndex& bi, std::uint64_t j,
                                  SampleCache& cache) {
  TransitionResult res;
  res.transition = j;

  auto fail = [&res](FailureCode code, std::string detail) {
    res.pass = false;
    res.code = code;
    res.detail = one_line(std::move(detail));
    return res;
  };

  // (a) membership of both checkpoint commitments under h5.
  auto cp_prev_it = bi.cps.find(j - 1);
  auto cp_next_it = bi.cps.find(j);
  auto slice_it = bi.slices.find(j);
  if (cp_prev_it == bi.cps.end() || cp_next_it == bi.cps.end())
    return fail(FailureCode::incomplete_disclosure,
                "bundle does not disclose both checkpoints of the transition");
  if (slice_it == bi.slices.end())
    return fail(FailureCode::incomplete_disclosure,
                "bundle does not disclose the schedule slice of the transition");
  const DisclosureBundle::CheckpointProof& prev = *cp_prev_it->second;
  const DisclosureBundle::CheckpointProof& next = *cp_next_it->second;
  const DisclosureBundle::TransitionSlice& slice = *slice_it->second;

  if (prev.step >= next.step)
    return fail(FailureCode::membership_fail, "checkpoint steps are not increasing");
  const std::uint64_t rows = next.step - prev.step;
  const std::uint64_t b = bi.meta.batch_size;
  if (slice.indices.size() != rows * b)
    return fail(FailureCode::membership_fail,
                "schedule slice size does not match the checkpoint span");

  // The slice root of the starting checkpoint is recomputed from the
  // disclosed rows; the ending checkpoint's slice root is taken as claimed
  // (it is bound to the signed root by the membership path).
  std::vector<Bytes> row_leaves;
  row_leaves.reserve(static_cast<std::size_t>(rows));
  for (std::uint64_t t = 0; t < rows; ++t) {
    ByteWriter w;
    for (std::uint64_t c = 0; c < b; ++c) w.u64(slice.indices[t * b + c]);
    row_leaves.push_back(w.take());
  }
  Digest slice_root = build_tree(row_leaves, bi.meta.bulk_arity).root();
  if (slice_root != prev.slice_root)
    return fail(FailureCode::membership_fail,
                "disclosed schedule slice does not match the committed slice root");

  auto checkpoint_member = [&bi](const DisclosureBundle::CheckpointProof& cp,
                                 const Digest& slice_root_value) {
    Digest state_root =
        build_tree(chunk_bytes(as_view(cp.state_bytes), kStateChunkBytes), bi.meta.bulk_arity)
            .root();
    Digest aux_root = leaf_digest(as_view(cp.aux_bytes));
    Digest combined = checkpoint_combined(cp.step, state_root, slice_root_value, aux_root);
    return cp.path.leaf_index == cp.ordinal && verify_digest_path(combined, cp.path, bi.bundle->h5);
  };
  if (!checkpoint_member(prev, slice_root))
    return fail(FailureCode::membership_fail,
                "starting checkpoint is not a member of the signed category-5 tree");
  if (!checkpoint_member(next, next.slice_root))
    return fail(FailureCode::membership_fail,
                "ending checkpoint is not a member of the signed category-5 tree");
  if (next.ordinal == bi.bundle->transitions_total && next.step != bi.meta.steps)
    return fail(FailureCode::membership_fail,
                "final checkpoint step disagrees with the committed step count");

  // (b) every referenced item must hash to its manifest entry under h4.
  std::vector<std::uint64_t> needed(slice.indices.begin(), slice.indices.end());
  std::sort(needed.begin(), needed.end());
  needed.erase(std::unique(needed.begin(), needed.end()), needed.end());
  for (std::uint64_t idx : needed) {
    auto it = bi.items.find(idx);
    if (it == bi.items.end())
      return fail(FailureCode::incomplete_disclosure,
                  "bundle does not disclose item " + std::to_string(idx));
    const DisclosureBundle::Item& item = *it->second;
    ByteWriter w;
    w.u64(idx);
    w.raw(sha256(as_view(item.payload)).view());
    if (item.manifest_path.leaf_index != idx - 1 ||
        !verify_path(as_view(w.bytes()), item.manifest_path, bi.bundle->h4))
      return fail(FailureCode::data_hash_mismatch,
                  "item " + std::to_string(idx) + " does not match the signed manifest");
  }

  // (c) replay the slice and compare against the ending state bytes.
  try {
    if (prev.ordinal == 0) {
      ModelState f0 =
          init_model(bi.cfg.arch, bi.cfg.init_seed, bi.cfg.init_scale, bi.cfg.optimizer);
      if (f0.canonical_bytes(bi.cfg.optimizer) != prev.state_bytes)
        return fail(FailureCode::replay_mismatch,
                    "starting checkpoint does not match the seeded initialization");
    }
    BatchSchedule expected = batch_schedule(bi.cfg.shuffle_seed, bi.meta.dataset_size,
                                            bi.meta.batch_size, bi.meta.steps);
    std::span<const std::uint64_t> expect_rows =
        std::span<const std::uint64_t>(expected.indices)
            .subspan(static_cast<std::size_t>(prev.step * b), static_cast<std::size_t>(rows * b));
    if (!std::equal(expect_rows.begin(), expect_rows.end(), slice.indices.begin()))
      return fail(FailureCode::replay_mismatch,
                  "schedule slice does not match the seeded derivation");
    Bytes expect_aux =
        le64_bytes(shuffle_state_at(bi.cfg.shuffle_seed, bi.meta.dataset_size,
                                    bi.meta.batch_size, prev.step));
    if (expect_aux != prev.aux_bytes)
      return fail(FailureCode::replay_mismatch,
                  "auxiliary state does not match the seeded derivation");

    ModelState start = ModelState::from_bytes(as_view(prev.state_bytes), bi.cfg.optimizer);
    if (start.step_index != prev.step)
      return fail(FailureCode::replay_mismatch,
                  "starting state bytes claim a different step index");
    if (start.weights.size() != bi.meta.param_count)
      return fail(FailureCode::replay_mismatch,
                  "starting state parameter count disagrees with metadata");
    SampleLookup lookup = [&cache](std::uint64_t index) -> const Sample& {
      return cache.get(index);
    };
    ModelState end = train_range(std::move(start), slice.indices, prev.step, lookup, bi.cfg);
    if (end.canonical_bytes(bi.cfg.optimizer) != next.state_bytes)
      return fail(FailureCode::replay_mismatch,
                  "replayed transition does not reproduce the ending checkpoint");
  } catch (const std::exception& e) {
    return fail(FailureCode::replay_mismatch, std::string("replay failed: ") + e.what());
  }

  res.pass = true;
  return res;
}

}  // namespace

VerificationReport verify_transitions(const DisclosureBundle& bundle, const AuditPlan& plan,
                                      const PublicKey& pk) {
  VerificationReport rep;
  rep.mode = RecordMode::partial;
  rep.overall = true;
  rep.sampled = plan.sampled;
  rep.verifier_seed = plan.verifier_seed;
  rep.seeded = true;

  // Check 1: signature over the claimed root.
  if (!verify_signed_root(bundle.signed_root, pk)) {
    add_fail(rep, 1, "signature", FailureCode::signature_invalid,
             "signature does not verify under the supplied public key");
    return rep;
  }
  add_pass(rep, 1, "signature");

  // Check 2: the disclosed category bytes and roots must recompose into the
  // signed root.
  {
    Digest h1 = leaf_digest(as_view(bundle.meta));
    Digest h2 = leaf_digest(as_view(bundle.setup));
    Digest h3 = leaf_digest(as_view(bundle.trainer));
    std::vector<Digest> cats{h1, h2, h3, bundle.h4, bundle.h5};
    if (internal_digest(cats) != bundle.signed_root.root) {
      add_fail(rep, 2, "commitments", FailureCode::tree_mismatch,
               "category roots do not recompose into the signed root");
      return rep;
    }
  }
  add_pass(rep, 2, "commitments");

  // Check 3: the sampled transitions.
  BundleIndex bi;
  bi.bundle = &bundle;
  try {
    bi.meta = parse_meta(as_view(bundle.meta));
    bi.cfg = TrainConfig::from_category_bytes(as_view(bundle.setup), as_view(bundle.trainer));
  } catch (const std::exception& e) {
    add_fail(rep, 3, "transitions", FailureCode::incomplete_disclosure,
             std::string("record metadata is not usable: ") + e.what());
    return rep;
  }
  if (plan.transitions_total != bundle.transitions_total) {
    add_fail(rep, 3, "transitions", FailureCode::incomplete_disclosure,
             "plan covers " + std::to_string(plan.transitions_total) +
                 " transitions, bundle covers " + std::to_string(bundle.transitions_total));
    return rep;
  }
  if (bi.meta.bulk_arity != bundle.bulk_arity || bi.cfg.batch_size != bi.meta.batch_size ||
      bi.cfg.arch.param_count() != bi.meta.param_count) {
    add_fail(rep, 3, "transitions", FailureCode::incomplete_disclosure,
             "bundle header disagrees with the committed metadata");
    return rep;
  }
  for (const auto& item : bundle.items) bi.items.emplace(item.index, &item);
  for (const auto& cp : bundle.checkpoints) bi.cps.emplace(cp.ordinal, &cp);
  for (const auto& s : bundle.slices) bi.slices.emplace(s.transition, &s);

  SampleCache cache([&bi](std::uint64_t index) -> BytesView {
    auto it = bi.items.find(index);
    if (it == bi.items.end())
      raise(Errc::invalid_argument, "item " + std::to_string(index) + " is not disclosed");
    return as_view(it->second->payload);
  });

  bool all_pass = true;
  for (std::uint64_t j : plan.sampled) {
    TransitionResult res = check_transition(bi, j, cache);
    bool pass = res.pass;
    FailureCode code = res.code;
    rep.transitions.push_back(std::move(res));
    if (!pass) {
      all_pass = false;
      rep.overall = false;
      if (rep.first_failure == FailureCode::none) rep.first_failure = code;
      break;  // strict short-circuit: later transitions are not evaluated
    }
  }
  if (!all_pass) {
    rep.checks.push_back({3, "transitions", false, rep.first_failure,
                          "a sampled transition failed; see transition lines"});
    return rep;
  }
  add_pass(rep, 3, "transitions");
  return rep;
}

}  // namespace tcat
