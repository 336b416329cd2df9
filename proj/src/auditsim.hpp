#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tcat {

// Probability that an attacker who manipulated `a` of `m` transitions
// escapes an audit of `v` distinct uniformly sampled transitions:
// prod_{i=0}^{v-1} (1 - a/(m-i)), the hypergeometric zero-overlap ratio.
double escape_probability_exact(std::uint64_t m, std::uint64_t v, std::uint64_t a);

// First-order approximation exp(-a*v/m).
double escape_probability_approx(std::uint64_t m, std::uint64_t v, std::uint64_t a);

enum class AttackKind : std::uint8_t { data_substitution = 0, step_count_lie = 1, leveling = 2 };
enum class SamplerKind : std::uint8_t { uniform = 0, weight_delta_heuristic = 1 };

const char* attack_kind_name(AttackKind k);
const char* sampler_name(SamplerKind s);
AttackKind attack_kind_from_name(const std::string& s);
SamplerKind sampler_from_name(const std::string& s);

// A manipulated training history at metadata level: transitions 1..m, of
// which [first_bad, first_bad + manipulated) would fail verification if
// sampled. For the leveling attack the per-transition weight-delta
// magnitudes are modeled too: an unleveled attacker leaves an anomalously
// large delta on the manipulated transitions, a leveling attacker flattens
// the profile to the baseline.
struct AttackScenario {
  AttackKind kind = AttackKind::data_substitution;
  std::uint64_t transitions = 0;  // m
  std::uint64_t manipulated = 0;  // a
  std::uint64_t first_bad = 1;
  std::vector<double> deltas;  // size m; used by the heuristic sampler
};

AttackScenario make_data_substitution(std::uint64_t m, std::uint64_t a,
                                      std::uint64_t first_bad = 1);
// The prover claims more steps than were run: the trailing `lied`
// transitions are fabricated and fail when sampled.
AttackScenario make_step_count_lie(std::uint64_t m, std::uint64_t lied = 1);
AttackScenario make_leveling(std::uint64_t m, std::uint64_t a, std::uint64_t first_bad,
                             double baseline_delta, double anomaly_factor, bool leveled);

struct WilsonInterval {
  double low = 0.0;
  double high = 0.0;
};

// 95% Wilson score interval for a binomial proportion.
WilsonInterval wilson95(std::uint64_t hits, std::uint64_t trials);

struct AuditOutcome {
  std::uint64_t trials = 0;
  std::uint64_t detections = 0;
  double detection_rate = 0.0;
  WilsonInterval detection_ci;
  double escape_rate = 0.0;
  WilsonInterval escape_ci;
};

// Monte Carlo audit: per trial, draw v distinct transitions with the chosen
// sampler; a trial detects iff it samples a manipulated transition. Trial
// randomness comes from per-trial child seeds split off `seed`, so a given
// (scenario, v, sampler, trials, seed) tuple is reproducible.
AuditOutcome simulate_audit(const AttackScenario& scenario, std::uint64_t v,
                            SamplerKind sampler, std::uint64_t trials, std::uint64_t seed);

// CSV output used by the command-line simulator; one row per run.
std::string simulation_csv_header();
std::string simulation_csv_row(const AttackScenario& scenario, std::uint64_t v,
                               SamplerKind sampler, const AuditOutcome& outcome,
                               std::uint64_t seed);

}  // namespace tcat
