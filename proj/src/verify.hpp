#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "attest.hpp"
#include "bytes.hpp"
#include "sign.hpp"

namespace tcat {

enum class FailureCode : std::uint8_t {
  none = 0,
  signature_invalid,
  tree_mismatch,
  data_hash_mismatch,
  replay_mismatch,
  membership_fail,
  incomplete_disclosure,
};

const char* failure_code_name(FailureCode c);

struct CheckResult {
  int number = 0;
  std::string name;
  bool pass = false;
  FailureCode code = FailureCode::none;
  std::string detail;
};

struct TransitionResult {
  std::uint64_t transition = 0;
  bool pass = false;
  FailureCode code = FailureCode::none;
  std::string detail;
};

// Checks run in a fixed order and stop at the first failure; the report
// lists every check that ran. first_failure is the code of the earliest
// failing check (transition sub-checks included, in ascending transition
// order).
struct VerificationReport {
  RecordMode mode = RecordMode::complete;
  std::vector<CheckResult> checks;
  std::vector<std::uint64_t> sampled;  // partial mode
  std::uint64_t verifier_seed = 0;
  bool seeded = false;
  std::vector<TransitionResult> transitions;  // partial mode
  bool overall = false;
  FailureCode first_failure = FailureCode::none;

  std::string render() const;
};

// Verifier-chosen audit plan: v distinct transitions out of {1..m}, drawn by
// a Fisher-Yates prefix of the verifier-seeded stream, reported sorted.
struct AuditPlan {
  std::uint64_t transitions_total = 0;  // m
  std::uint64_t sample_count = 0;       // v
  std::uint64_t verifier_seed = 0;
  std::vector<std::uint64_t> sampled;
};

AuditPlan sample_transitions(std::uint64_t transitions_total, std::uint64_t sample_count,
                             std::uint64_t verifier_seed);
std::string render_plan(const AuditPlan& plan);
AuditPlan parse_plan(const std::string& text);

// Complete verification: 1 signature, 2 commitment recomputation, 3 dataset
// hashes, 4 full replay against the claimed final state bytes.
VerificationReport verify_complete(const AttestationRecord& rec, BytesView claimed_final_state,
                                   std::span<const Bytes> payloads, const PublicKey& pk);

// Partial verification from a disclosure bundle alone: 1 signature, 2 root
// composition, 3 per-sampled-transition membership / data hash / replay.
VerificationReport verify_transitions(const DisclosureBundle& bundle, const AuditPlan& plan,
                                      const PublicKey& pk);

}  // namespace tcat
