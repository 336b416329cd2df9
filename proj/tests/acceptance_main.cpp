// Acceptance gate: one line per criterion, nonzero exit if any fails.
// Every randomized section draws from fixed seeds, so a run is reproducible.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "attest.hpp"
#include "auditsim.hpp"
#include "bytes.hpp"
#include "dataset.hpp"
#include "detnet.hpp"
#include "merkle.hpp"
#include "prng.hpp"
#include "runfile.hpp"
#include "sign.hpp"
#include "verify.hpp"

#include "test_util.hpp"

namespace {

using namespace tcat;
using boost::multiprecision::cpp_int;
using Clock = std::chrono::steady_clock;

int g_failed = 0;

void report(int number, bool pass, const std::string& label, double seconds) {
  std::printf("criterion %2d: %s  %s [%.2f s]\n", number, pass ? "pass" : "FAIL", label.c_str(),
              seconds);
  std::fflush(stdout);
  if (!pass) ++g_failed;
}

// budget_seconds = 0 means no time limit; otherwise exceeding it fails the
// criterion even when the checks themselves pass.
template <typename Fn>
void run_criterion(int number, double budget_seconds, Fn&& body) {
  auto t0 = Clock::now();
  bool pass = false;
  std::string label;
  try {
    pass = body(label);
  } catch (const std::exception& e) {
    pass = false;
    label += std::string(label.empty() ? "" : "; ") + "exception: " + e.what();
  }
  double seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  if (pass && budget_seconds > 0.0 && seconds > budget_seconds) {
    pass = false;
    label += " (over the " + std::to_string(budget_seconds) + " s budget)";
  }
  report(number, pass, label, seconds);
}

KeyPair fixed_keypair(std::uint8_t fill) {
  std::array<std::uint8_t, 32> seed{};
  seed.fill(fill);
  return keypair_from_seed(seed);
}

Bytes slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// ---- criterion 1: escape probability reference values ----------------------

bool criterion_1(std::string& label) {
  double exact = escape_probability_exact(2500, 50, 5);
  double approx = escape_probability_approx(2500, 50, 5);
  char buf[128];
  std::snprintf(buf, sizeof buf, "escape probabilities: exact %.6f, approx %.6f", exact, approx);
  label = buf;
  return std::fabs(exact - 0.9038) <= 2e-4 && std::fabs(approx - 0.9048) <= 1e-4;
}

// ---- criterion 2: product formula == binomial ratio, exactly ---------------

bool criterion_2(std::string& label) {
  constexpr std::uint64_t kMaxM = 60;
  // Pascal triangle in exact integers.
  std::vector<std::vector<cpp_int>> C(kMaxM + 1);
  for (std::uint64_t n = 0; n <= kMaxM; ++n) {
    C[n].assign(n + 1, 1);
    for (std::uint64_t k = 1; k < n; ++k) C[n][k] = C[n - 1][k - 1] + C[n - 1][k];
  }
  std::uint64_t cells = 0;
  for (std::uint64_t m = 1; m <= kMaxM; ++m) {
    for (std::uint64_t v = 1; v <= m; ++v) {
      for (std::uint64_t a = 0; a + v <= m; ++a) {
        // prod (m-a-i)/(m-i) as an exact fraction of falling factorials.
        cpp_int num = 1, den = 1;
        for (std::uint64_t i = 0; i < v; ++i) {
          num *= m - a - i;
          den *= m - i;
        }
        if (num * C[m][v] != C[m - a][v] * den) {
          label = "mismatch at m=" + std::to_string(m) + " v=" + std::to_string(v) +
                  " a=" + std::to_string(a);
          return false;
        }
        ++cells;
      }
    }
  }
  label = "product formula equals the binomial ratio on " + std::to_string(cells) + " cells";
  return true;
}

// ---- criterion 3: Monte Carlo coverage across a parameter grid -------------

bool criterion_3(std::string& label) {
  const std::uint64_t ms[] = {60, 120, 250, 500, 1000};
  const std::uint64_t vs[] = {5, 10, 20, 40};
  const std::uint64_t as[] = {1, 2, 4, 8, 16};
  const std::uint64_t kTrials = 100000;
  int cells = 0, covered = 0;
  for (std::uint64_t m : ms) {
    for (std::uint64_t v : vs) {
      for (std::uint64_t a : as) {
        double exact = escape_probability_exact(m, v, a);
        AttackScenario sc = make_data_substitution(m, a);
        std::uint64_t seed = Splitmix64::output_at(0xC0FFEE, static_cast<std::uint64_t>(cells));
        AuditOutcome out = simulate_audit(sc, v, SamplerKind::uniform, kTrials, seed);
        ++cells;
        if (out.escape_ci.low <= exact && exact <= out.escape_ci.high) ++covered;
      }
    }
  }
  label = "interval covers the exact rate in " + std::to_string(covered) + "/" +
          std::to_string(cells) + " cells";
  return cells == 100 && covered >= 93;
}

// ---- reference scenario shared by criteria 4 and 10 -------------------------

TrainConfig reference_config() {
  TrainConfig cfg;
  cfg.arch.layer_sizes = {2, 16, 2};
  cfg.arch.activation = Activation::relu;
  cfg.arch.loss = Loss::mse;
  cfg.optimizer = OptimizerKind::sgd;
  cfg.learning_rate = 0.05f;
  cfg.init_scale = 0.5f;
  cfg.batch_size = 8;
  cfg.init_seed = 4242;
  cfg.shuffle_seed = 1717;
  return cfg;
}

struct ReferencePipeline {
  std::vector<Bytes> payloads;
  TrainRun run;
  AttestationRecord complete_rec;
  AttestationRecord partial_rec;
};

ReferencePipeline run_reference_pipeline(const KeyPair& kp) {
  ReferencePipeline p;
  TrainConfig cfg = reference_config();
  p.payloads = generate_synthetic_payloads(256, 2, 2, false, 99);
  p.run = run_training(cfg, 2500, p.payloads, 250);
  p.complete_rec = build_complete_record(cfg, p.run.steps, p.run.manifest, p.run.schedule,
                                         as_view(p.run.initial_state));
  sign_record(p.complete_rec, kp);
  p.partial_rec =
      build_partial_record(cfg, p.run.steps, p.run.manifest, p.run.schedule, p.run.checkpoints);
  sign_record(p.partial_rec, kp);
  return p;
}

bool criterion_4(std::string& label) {
  KeyPair kp = fixed_keypair(0x33);
  ReferencePipeline p = run_reference_pipeline(kp);
  VerificationReport rep =
      verify_complete(p.complete_rec, as_view(p.run.final_state), p.payloads, kp.public_key);
  bool four_checks = rep.checks.size() == 4 &&
                     std::all_of(rep.checks.begin(), rep.checks.end(),
                                 [](const CheckResult& c) { return c.pass; });
  label = "train, attest and verify a 2-16-2 run of 2500 steps (" +
          std::to_string(rep.checks.size()) + "/4 checks pass)";
  return rep.overall && four_checks;
}

// ---- criterion 5: mutation corpus fails at the right first check -----------

// Single-bit flip that keeps a schedule index inside [1, d].
std::uint64_t flip_index_in_range(std::uint64_t value, std::uint64_t d, Splitmix64& rng) {
  std::uint64_t start = rng.below(5);
  for (std::uint64_t i = 0; i < 5; ++i) {
    std::uint64_t flipped = value ^ (1ull << ((start + i) % 5));
    if (flipped >= 1 && flipped <= d) return flipped;
  }
  return value ^ 1ull;  // unreachable for d = 31
}

AuditPlan single_transition_plan(std::uint64_t m, std::uint64_t j) {
  AuditPlan plan;
  plan.transitions_total = m;
  plan.sample_count = 1;
  plan.verifier_seed = 0;
  plan.sampled = {j};
  return plan;
}

bool criterion_5(std::string& label) {
  KeyPair kp = fixed_keypair(0x44);
  TrainConfig cfg;
  cfg.arch.layer_sizes = {2, 4, 2};
  cfg.arch.activation = Activation::relu;
  cfg.arch.loss = Loss::mse;
  cfg.optimizer = OptimizerKind::sgd;
  cfg.learning_rate = 0.05f;
  cfg.init_scale = 0.5f;
  cfg.batch_size = 4;
  cfg.init_seed = 909;
  cfg.shuffle_seed = 707;
  const std::uint64_t d = 31, k = 40, every = 4;
  std::vector<Bytes> payloads = generate_synthetic_payloads(d, 2, 2, false, 55);
  TrainRun run = run_training(cfg, k, payloads, every);
  AttestationRecord complete_rec = build_complete_record(cfg, k, run.manifest, run.schedule,
                                                         as_view(run.initial_state));
  sign_record(complete_rec, kp);
  AttestationRecord partial_rec =
      build_partial_record(cfg, k, run.manifest, run.schedule, run.checkpoints);
  sign_record(partial_rec, kp);
  const std::uint64_t m = partial_rec.transitions();

  // Honest baselines must pass before the corpus means anything.
  if (!verify_complete(complete_rec, as_view(run.final_state), payloads, kp.public_key).overall) {
    label = "honest complete baseline fails";
    return false;
  }
  {
    AuditPlan all;
    all.transitions_total = m;
    all.sample_count = m;
    all.sampled.resize(static_cast<std::size_t>(m));
    std::iota(all.sampled.begin(), all.sampled.end(), std::uint64_t{1});
    DisclosureBundle b = build_disclosure_bundle(partial_rec, payloads, all.sampled);
    if (!verify_transitions(b, all, kp.public_key).overall) {
      label = "honest partial baseline fails";
      return false;
    }
  }

  Splitmix64 rng(0x5EED5);
  int total = 0, failed = 0, right = 0;
  auto tally = [&](const VerificationReport& rep, FailureCode want) {
    ++total;
    if (!rep.overall) ++failed;
    if (!rep.overall && rep.first_failure == want) ++right;
  };

  // Data item flips against the complete record: the manifest still holds the
  // honest digests, so the hash check is the first to object.
  for (int c = 0; c < 40; ++c) {
    std::vector<Bytes> mut = payloads;
    Bytes& p = mut[static_cast<std::size_t>(rng.below(d))];
    p[static_cast<std::size_t>(rng.below(p.size()))] ^=
        static_cast<std::uint8_t>(1u << rng.below(8));
    tally(verify_complete(complete_rec, as_view(run.final_state), mut, kp.public_key),
          FailureCode::data_hash_mismatch);
  }

  // Schedule index flips: rebuilt commitments no longer match the signed root.
  for (int c = 0; c < 40; ++c) {
    BatchSchedule sched = run.schedule;
    std::uint64_t pos = rng.below(sched.indices.size());
    sched.indices[static_cast<std::size_t>(pos)] =
        flip_index_in_range(sched.indices[static_cast<std::size_t>(pos)], d, rng);
    AttestationRecord mut =
        build_complete_record(cfg, k, run.manifest, sched, as_view(run.initial_state));
    mut.signed_root = complete_rec.signed_root;
    mut.is_signed = true;
    tally(verify_complete(mut, as_view(run.final_state), payloads, kp.public_key),
          FailureCode::tree_mismatch);
  }

  // Signature byte flips on the complete record.
  for (int c = 0; c < 30; ++c) {
    AttestationRecord mut = complete_rec;
    mut.signed_root.signature[static_cast<std::size_t>(rng.below(64))] ^=
        static_cast<std::uint8_t>(1u << rng.below(8));
    tally(verify_complete(mut, as_view(run.final_state), payloads, kp.public_key),
          FailureCode::signature_invalid);
  }

  // Partial-mode corpus: mutate disclosed evidence for a plan that samples an
  // affected transition.
  auto pick_affected = [&](std::uint64_t ordinal) {
    if (ordinal == 0) return std::uint64_t{1};
    if (ordinal == m) return m;
    return ordinal + rng.below(2);
  };
  auto bundle_for = [&](std::uint64_t j) {
    std::vector<std::uint64_t> sampled{j};
    return build_disclosure_bundle(partial_rec, payloads, sampled);
  };
  auto proof_of = [](DisclosureBundle& b, std::uint64_t ordinal) -> DisclosureBundle::CheckpointProof& {
    for (auto& cp : b.checkpoints)
      if (cp.ordinal == ordinal) return cp;
    throw std::runtime_error("ordinal not disclosed");
  };

  // Checkpoint weight flips break the membership proof.
  for (int c = 0; c < 40; ++c) {
    std::uint64_t ordinal = rng.below(m + 1);
    std::uint64_t j = pick_affected(ordinal);
    DisclosureBundle b = bundle_for(j);
    Bytes& state = proof_of(b, ordinal).state_bytes;
    state[static_cast<std::size_t>(rng.below(state.size()))] ^=
        static_cast<std::uint8_t>(1u << rng.below(8));
    tally(verify_transitions(b, single_transition_plan(m, j), kp.public_key),
          FailureCode::membership_fail);
  }

  // Step-count flips: ordering, slice span or digest breaks, all membership.
  for (int c = 0; c < 30; ++c) {
    std::uint64_t ordinal = rng.below(m + 1);
    std::uint64_t j = pick_affected(ordinal);
    DisclosureBundle b = bundle_for(j);
    proof_of(b, ordinal).step ^= 1ull << rng.below(8);
    tally(verify_transitions(b, single_transition_plan(m, j), kp.public_key),
          FailureCode::membership_fail);
  }

  // Schedule slice flips disagree with the committed slice root.
  for (int c = 0; c < 30; ++c) {
    std::uint64_t j = 1 + rng.below(m);
    DisclosureBundle b = bundle_for(j);
    auto& indices = b.slices.front().indices;
    indices[static_cast<std::size_t>(rng.below(indices.size()))] ^= 1ull << rng.below(8);
    tally(verify_transitions(b, single_transition_plan(m, j), kp.public_key),
          FailureCode::membership_fail);
  }

  // Disclosed item flips against the signed manifest.
  for (int c = 0; c < 30; ++c) {
    std::uint64_t j = 1 + rng.below(m);
    DisclosureBundle b = bundle_for(j);
    auto& item = b.items[static_cast<std::size_t>(rng.below(b.items.size()))];
    item.payload[static_cast<std::size_t>(rng.below(item.payload.size()))] ^=
        static_cast<std::uint8_t>(1u << rng.below(8));
    tally(verify_transitions(b, single_transition_plan(m, j), kp.public_key),
          FailureCode::data_hash_mismatch);
  }

  // Signature byte flips on the bundle.
  for (int c = 0; c < 20; ++c) {
    std::uint64_t j = 1 + rng.below(m);
    DisclosureBundle b = bundle_for(j);
    b.signed_root.signature[static_cast<std::size_t>(rng.below(64))] ^=
        static_cast<std::uint8_t>(1u << rng.below(8));
    tally(verify_transitions(b, single_transition_plan(m, j), kp.public_key),
          FailureCode::signature_invalid);
  }

  label = std::to_string(total) + " mutations: " + std::to_string(failed) + " rejected, " +
          std::to_string(right) + " at the right first check";
  return total == 260 && failed == total && right == total;
}

// ---- criterion 6: full-coverage sampling matches complete verification -----

bool criterion_6(std::string& label) {
  KeyPair kp = fixed_keypair(0x55);
  TrainConfig cfg;
  cfg.arch.layer_sizes = {2, 4, 2};
  cfg.arch.activation = Activation::relu;
  cfg.arch.loss = Loss::mse;
  cfg.optimizer = OptimizerKind::sgd;
  cfg.learning_rate = 0.05f;
  cfg.init_scale = 0.5f;
  cfg.batch_size = 4;
  cfg.init_seed = 1201;
  cfg.shuffle_seed = 3401;
  const std::uint64_t d = 40, k = 100;
  std::vector<Bytes> payloads = generate_synthetic_payloads(d, 2, 2, false, 88);
  TrainRun run = run_training(cfg, k, payloads, 2);
  AttestationRecord rec_c = build_complete_record(cfg, k, run.manifest, run.schedule,
                                                  as_view(run.initial_state));
  sign_record(rec_c, kp);
  AttestationRecord rec_p =
      build_partial_record(cfg, k, run.manifest, run.schedule, run.checkpoints);
  sign_record(rec_p, kp);
  const std::uint64_t m = rec_p.transitions();
  if (m != 50) {
    label = "expected 50 transitions, got " + std::to_string(m);
    return false;
  }
  AuditPlan plan = sample_transitions(m, m, 77);

  auto partial_verdict = [&](const AttestationRecord& rec, std::span<const Bytes> pls,
                             std::function<void(DisclosureBundle&)> mutate) {
    DisclosureBundle b = build_disclosure_bundle(rec, pls, plan.sampled);
    if (mutate) mutate(b);
    return verify_transitions(b, plan, kp.public_key);
  };

  int matched = 0, cases = 0;
  auto compare = [&](const VerificationReport& rc, const VerificationReport& rp,
                     bool expect_pass) {
    ++cases;
    bool same = rc.overall == rp.overall && rc.first_failure == rp.first_failure &&
                rc.overall == expect_pass;
    if (same) ++matched;
  };

  // Honest record: both verdicts pass.
  compare(verify_complete(rec_c, as_view(run.final_state), payloads, kp.public_key),
          partial_verdict(rec_p, payloads, nullptr), true);

  Splitmix64 rng(0xFACBEEF);

  // Five tampered data items (evidence flipped, manifests untouched).
  for (int c = 0; c < 5; ++c) {
    std::uint64_t idx = 1 + rng.below(d);
    std::uint64_t byte = rng.below(32);
    std::uint8_t bit = static_cast<std::uint8_t>(1u << rng.below(8));
    std::vector<Bytes> mut = payloads;
    mut[static_cast<std::size_t>(idx - 1)][static_cast<std::size_t>(byte)] ^= bit;
    auto rc = verify_complete(rec_c, as_view(run.final_state), mut, kp.public_key);
    auto rp = partial_verdict(rec_p, payloads, [&](DisclosureBundle& b) {
      for (auto& item : b.items)
        if (item.index == idx) item.payload[static_cast<std::size_t>(byte)] ^= bit;
    });
    compare(rc, rp, false);
  }

  // Three signature flips and two signed-root flips.
  for (int c = 0; c < 5; ++c) {
    std::uint64_t byte = rng.below(c < 3 ? 64 : 32);
    std::uint8_t bit = static_cast<std::uint8_t>(1u << rng.below(8));
    AttestationRecord mc = rec_c;
    if (c < 3)
      mc.signed_root.signature[static_cast<std::size_t>(byte)] ^= bit;
    else
      mc.signed_root.root.bytes[static_cast<std::size_t>(byte)] ^= bit;
    auto rc = verify_complete(mc, as_view(run.final_state), payloads, kp.public_key);
    auto rp = partial_verdict(rec_p, payloads, [&](DisclosureBundle& b) {
      if (c < 3)
        b.signed_root.signature[static_cast<std::size_t>(byte)] ^= bit;
      else
        b.signed_root.root.bytes[static_cast<std::size_t>(byte)] ^= bit;
    });
    compare(rc, rp, false);
  }

  // Five doctored final states, re-signed: only replay can object.
  for (int c = 0; c < 5; ++c) {
    std::uint64_t byte = 8 + rng.below(cfg.arch.param_count() * 4);
    std::uint8_t bit = static_cast<std::uint8_t>(1u << rng.below(8));
    Bytes claimed = run.final_state;
    claimed[static_cast<std::size_t>(byte)] ^= bit;
    auto rc = verify_complete(rec_c, as_view(claimed), payloads, kp.public_key);
    std::vector<Checkpoint> cps = run.checkpoints;
    cps.back().state_bytes[static_cast<std::size_t>(byte)] ^= bit;
    AttestationRecord mp = build_partial_record(cfg, k, run.manifest, run.schedule, cps);
    sign_record(mp, kp);
    auto rp = partial_verdict(mp, payloads, nullptr);
    compare(rc, rp, false);
  }

  // Five schedule row swaps inside one transition, re-signed: the committed
  // schedule no longer matches the seeded derivation.
  for (std::uint64_t t : {5u, 15u, 25u, 35u, 45u}) {
    BatchSchedule sched = run.schedule;
    auto row0 = sched.indices.begin() +
                static_cast<std::ptrdiff_t>(2 * t * cfg.batch_size);
    std::swap_ranges(row0, row0 + static_cast<std::ptrdiff_t>(cfg.batch_size),
                     row0 + static_cast<std::ptrdiff_t>(cfg.batch_size));
    AttestationRecord mc =
        build_complete_record(cfg, k, run.manifest, sched, as_view(run.initial_state));
    sign_record(mc, kp);
    auto rc = verify_complete(mc, as_view(run.final_state), payloads, kp.public_key);
    AttestationRecord mp = build_partial_record(cfg, k, run.manifest, sched, run.checkpoints);
    sign_record(mp, kp);
    auto rp = partial_verdict(mp, payloads, nullptr);
    compare(rc, rp, false);
  }

  label = "verdicts agree on " + std::to_string(matched) + "/" + std::to_string(cases) +
          " cases (honest + 20 tampered)";
  return cases == 21 && matched == cases;
}

// ---- criterion 7: detection rate of an understated step count --------------

bool criterion_7(std::string& label) {
  AttackScenario sc = make_step_count_lie(100, 1);
  AuditOutcome out = simulate_audit(sc, 10, SamplerKind::uniform, 100000, 0xBADC0DE);
  double exact = escape_probability_exact(100, 10, 1);
  char buf[128];
  std::snprintf(buf, sizeof buf, "empirical escape %.4f vs exact %.4f", out.escape_rate, exact);
  label = buf;
  return std::fabs(out.escape_rate - 0.900) <= 0.005 && std::fabs(exact - 0.9) < 1e-12;
}

// ---- criterion 8: leveling restores the uniform escape odds ----------------

bool criterion_8(std::string& label) {
  const std::uint64_t m = 400, v = 10, a = 4;
  double exact = escape_probability_exact(m, v, a);
  AttackScenario sc = make_leveling(m, a, 100, 1.0, 8.0, true);
  AuditOutcome out =
      simulate_audit(sc, v, SamplerKind::weight_delta_heuristic, 100000, 0x1E7E1);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "leveled heuristic escape %.4f, interval [%.4f, %.4f], exact %.4f",
                out.escape_rate, out.escape_ci.low, out.escape_ci.high, exact);
  label = buf;
  return out.escape_ci.low <= exact && exact <= out.escape_ci.high;
}

// ---- criterion 9: storage estimator reference points -----------------------

bool criterion_9(std::string& label) {
  const std::uint64_t n = 1ull << 27, m = 100;
  StorageEstimate sgd = estimate_storage(n, m, 16, OptimizerKind::sgd);
  StorageEstimate adam = estimate_storage(n, m, 16, OptimizerKind::adam);
  bool ok = sgd.per_checkpoint_payload == (1ull << 29) &&      // 2^9 MB
            sgd.penultimate_level == (1ull << 28) &&
            sgd.total_bound == m * (1ull << 30) &&             // m GB
            adam.total_bound == 2 * m * (1ull << 30);          // 2m GB
  label = "payload " + std::to_string(sgd.per_checkpoint_payload) + " B, penultimate " +
          std::to_string(sgd.penultimate_level) + " B, bounds " +
          std::to_string(sgd.total_bound) + " / " + std::to_string(adam.total_bound) + " B";
  return ok;
}

// ---- criterion 10: byte-identical reruns, gradient checks ------------------

bool criterion_10(std::string& label) {
  ScratchDir dir;
  KeyPair kp = fixed_keypair(0x66);
  ReferencePipeline a = run_reference_pipeline(kp);
  ReferencePipeline b = run_reference_pipeline(kp);
  write_record_file(dir.file("a_complete.rec"), a.complete_rec);
  write_record_file(dir.file("b_complete.rec"), b.complete_rec);
  write_record_file(dir.file("a_partial.rec"), a.partial_rec);
  write_record_file(dir.file("b_partial.rec"), b.partial_rec);
  bool identical = slurp(dir.file("a_complete.rec")) == slurp(dir.file("b_complete.rec")) &&
                   slurp(dir.file("a_partial.rec")) == slurp(dir.file("b_partial.rec"));

  Splitmix64 rng(2026);
  int checked = 0, under = 0;
  double worst = 0.0;
  for (int c = 0; c < 100; ++c) {
    TrainConfig cfg;
    bool classify = rng.below(2) == 1;
    std::uint64_t in_dim = 1 + rng.below(4);
    std::uint64_t out_dim = classify ? 2 + rng.below(3) : 1 + rng.below(3);
    cfg.arch.layer_sizes = {in_dim, 1 + rng.below(6), out_dim};
    if (rng.below(2) == 1) cfg.arch.layer_sizes.insert(cfg.arch.layer_sizes.begin() + 2,
                                                       1 + rng.below(6));
    cfg.arch.activation = rng.below(2) == 1 ? Activation::relu : Activation::identity;
    cfg.arch.loss = classify ? Loss::softmax_cross_entropy : Loss::mse;
    cfg.l2 = rng.below(2) == 1 ? 0.01f : 0.0f;
    cfg.batch_size = 1 + rng.below(3);
    cfg.init_seed = 1000 + static_cast<std::uint64_t>(c);
    cfg.init_scale = 0.5f;
    ModelState state = init_model(cfg.arch, cfg.init_seed, cfg.init_scale, OptimizerKind::sgd);
    std::vector<Sample> batch(static_cast<std::size_t>(cfg.batch_size));
    for (Sample& s : batch) {
      s.input.resize(static_cast<std::size_t>(in_dim));
      for (float& x : s.input) x = rng.next_unit_f32() * 2.0f - 1.0f;
      s.target.assign(static_cast<std::size_t>(out_dim), 0.0f);
      if (classify)
        s.target[static_cast<std::size_t>(rng.below(out_dim))] = 1.0f;
      else
        for (float& y : s.target) y = rng.next_unit_f32() * 2.0f - 1.0f;
    }
    double err = gradient_check(state, batch, cfg);
    worst = std::max(worst, err);
    ++checked;
    if (err < 1e-3) ++under;
  }

  char buf[160];
  std::snprintf(buf, sizeof buf,
                "containers byte-identical: %s; gradient checks %d/%d below 1e-3 (worst %.2e)",
                identical ? "yes" : "NO", under, checked, worst);
  label = buf;
  return identical && checked == 100 && under == checked;
}

// ---- criterion 11: tree audit paths, mutation sensitivity, node growth -----

bool criterion_11(std::string& label) {
  Splitmix64 rng(2025);
  auto random_leaves = [&rng](std::uint64_t count) {
    std::vector<Bytes> leaves(static_cast<std::size_t>(count));
    for (Bytes& leaf : leaves) {
      leaf.resize(1 + static_cast<std::size_t>(rng.below(24)));
      for (std::uint8_t& byte : leaf) byte = static_cast<std::uint8_t>(rng.below(256));
    }
    return leaves;
  };

  int trees = 0, paths_ok = 0, paths = 0, mutations = 0, roots_changed = 0;
  for (int t = 0; t < 1000; ++t) {
    std::uint32_t arity = 2 + static_cast<std::uint32_t>(rng.below(15));
    std::uint64_t count = 1 + rng.below(5000);
    std::vector<Bytes> leaves = random_leaves(count);
    MerkleTree tree = build_tree(leaves, arity);
    ++trees;
    for (int q = 0; q < 3; ++q) {
      std::uint64_t pos = rng.below(count);
      AuditPath path = audit_path(tree, pos);
      ++paths;
      if (verify_path(as_view(leaves[static_cast<std::size_t>(pos)]), path, tree.root()))
        ++paths_ok;
    }
    std::uint64_t pos = rng.below(count);
    Bytes& victim = leaves[static_cast<std::size_t>(pos)];
    victim[static_cast<std::size_t>(rng.below(victim.size()))] ^=
        static_cast<std::uint8_t>(1u << rng.below(8));
    ++mutations;
    if (build_tree(leaves, arity).root() != tree.root()) ++roots_changed;
  }

  double r4096 = static_cast<double>(node_count(4096, 2)) / static_cast<double>(node_count(4096, 4));
  double r1m = static_cast<double>(node_count(1000000, 2)) /
               static_cast<double>(node_count(1000000, 4));
  bool ratio_ok = r4096 == 3.0 && std::fabs(r1m - 3.0) < 0.01;

  char buf[200];
  std::snprintf(buf, sizeof buf,
                "%d trees, %d/%d paths verify, %d/%d mutations change the root, "
                "node ratio %.3f / %.5f",
                trees, paths_ok, paths, roots_changed, mutations, r4096, r1m);
  label = buf;
  return trees == 1000 && paths_ok == paths && roots_changed == mutations && ratio_ok;
}

}  // namespace

int main() {
  run_criterion(1, 1.0, [](std::string& l) { return criterion_1(l); });
  run_criterion(2, 10.0, [](std::string& l) { return criterion_2(l); });
  run_criterion(3, 120.0, [](std::string& l) { return criterion_3(l); });
  run_criterion(4, 60.0, [](std::string& l) { return criterion_4(l); });
  run_criterion(5, 0.0, [](std::string& l) { return criterion_5(l); });
  run_criterion(6, 0.0, [](std::string& l) { return criterion_6(l); });
  run_criterion(7, 0.0, [](std::string& l) { return criterion_7(l); });
  run_criterion(8, 0.0, [](std::string& l) { return criterion_8(l); });
  run_criterion(9, 1.0, [](std::string& l) { return criterion_9(l); });
  run_criterion(10, 0.0, [](std::string& l) { return criterion_10(l); });
  run_criterion(11, 0.0, [](std::string& l) { return criterion_11(l); });
  std::printf("acceptance: %d/11 criteria passed\n", 11 - g_failed);
  return g_failed == 0 ? 0 : 1;
}
