#include "auditsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "error.hpp"
#include "prng.hpp"

namespace tcat {

namespace {

void check_mva(std::uint64_t m, std::uint64_t v, std::uint64_t a) {
  if (m < 1) raise(Errc::invalid_argument, "transition count must be >= 1");
  if (v < 1 || v > m) raise(Errc::invalid_argument, "sample count must be in [1, m]");
  if (a > m) raise(Errc::invalid_argument, "manipulated count must be <= m");
}

}  // namespace

double escape_probability_exact(std::uint64_t m, std::uint64_t v, std::uint64_t a) {
  check_mva(m, v, a);
  if (a == 0) return 1.0;
  double p = 1.0;
  for (std::uint64_t i = 0; i < v; ++i) {
    double factor = 1.0 - static_cast<double>(a) / static_cast<double>(m - i);
    if (factor <= 0.0) return 0.0;
    p *= factor;
  }
  return p;
}

double escape_probability_approx(std::uint64_t m, std::uint64_t v, std::uint64_t a) {
  check_mva(m, v, a);
  return std::exp(-static_cast<double>(a) * static_cast<double>(v) / static_cast<double>(m));
}

const char* attack_kind_name(AttackKind k) {
  switch (k) {
    case AttackKind::data_substitution: return "data_substitution";
    case AttackKind::step_count_lie: return "step_count_lie";
    case AttackKind::leveling: return "leveling";
  }
  return "?";
}

const char* sampler_name(SamplerKind s) {
  switch (s) {
    case SamplerKind::uniform: return "uniform";
    case SamplerKind::weight_delta_heuristic: return "weight_delta_heuristic";
  }
  return "?";
}

AttackKind attack_kind_from_name(const std::string& s) {
  if (s == "data_substitution") return AttackKind::data_substitution;
  if (s == "step_count_lie") return AttackKind::step_count_lie;
  if (s == "leveling") return AttackKind::leveling;
  raise(Errc::invalid_argument, "unknown attack kind: " + s);
}

SamplerKind sampler_from_name(const std::string& s) {
  if (s == "uniform") return SamplerKind::uniform;
  if (s == "weight_delta_heuristic") return SamplerKind::weight_delta_heuristic;
  raise(Errc::invalid_argument, "unknown sampler: " + s);
}

namespace {

void check_scenario(const AttackScenario& sc) {
  if (sc.transitions < 1) raise(Errc::invalid_argument, "scenario needs transitions");
  if (sc.manipulated > sc.transitions)
    raise(Errc::invalid_argument, "manipulated count exceeds transition count");
  if (sc.manipulated > 0 &&
      (sc.first_bad < 1 || sc.first_bad + sc.manipulated - 1 > sc.transitions))
    raise(Errc::invalid_argument, "manipulated range out of bounds");
  if (!sc.deltas.empty() && sc.deltas.size() != sc.transitions)
    raise(Errc::invalid_argument, "delta profile size must equal the transition count");
}

AttackScenario base_scenario(AttackKind kind, std::uint64_t m, std::uint64_t a,
                             std::uint64_t first_bad) {
  AttackScenario sc;
  sc.kind = kind;
  sc.transitions = m;
  sc.manipulated = a;
  sc.first_bad = first_bad;
  sc.deltas.assign(static_cast<std::size_t>(m), 1.0);
  check_scenario(sc);
  return sc;
}

}  // namespace

AttackScenario make_data_substitution(std::uint64_t m, std::uint64_t a, std::uint64_t first_bad) {
  return base_scenario(AttackKind::data_substitution, m, a, first_bad);
}

AttackScenario make_step_count_lie(std::uint64_t m, std::uint64_t lied) {
  if (lied < 1 || lied > m) raise(Errc::invalid_argument, "lied transition count out of range");
  return base_scenario(AttackKind::step_count_lie, m, lied, m - lied + 1);
}

AttackScenario make_leveling(std::uint64_t m, std::uint64_t a, std::uint64_t first_bad,
                             double baseline_delta, double anomaly_factor, bool leveled) {
  if (!(baseline_delta > 0.0) || !(anomaly_factor >= 1.0))
    raise(Errc::invalid_argument, "leveling profile needs baseline > 0 and factor >= 1");
  AttackScenario sc = base_scenario(AttackKind::leveling, m, a, first_bad);
  for (double& d : sc.deltas) d = baseline_delta;
  if (!leveled)
    for (std::uint64_t j = 0; j < a; ++j)
      sc.deltas[static_cast<std::size_t>(sc.first_bad - 1 + j)] = baseline_delta * anomaly_factor;
  return sc;
}

WilsonInterval wilson95(std::uint64_t hits, std::uint64_t trials) {
  if (trials == 0) raise(Errc::invalid_argument, "interval needs at least one trial");
  if (hits > trials) raise(Errc::invalid_argument, "hits cannot exceed trials");
  const double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double ph = static_cast<double>(hits) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (ph + z2 / (2.0 * n)) / denom;
  const double half = (z / denom) * std::sqrt(ph * (1.0 - ph) / n + z2 / (4.0 * n * n));
  WilsonInterval w;
  w.low = std::max(0.0, center - half);
  w.high = std::min(1.0, center + half);
  return w;
}

AuditOutcome simulate_audit(const AttackScenario& scenario, std::uint64_t v,
                            SamplerKind sampler, std::uint64_t trials, std::uint64_t seed) {
  check_scenario(scenario);
  const std::uint64_t m = scenario.transitions;
  check_mva(m, v, scenario.manipulated);
  if (trials < 1) raise(Errc::invalid_argument, "trial count must be >= 1");

  auto is_bad = [&scenario](std::uint64_t transition) {
    return scenario.manipulated > 0 && transition >= scenario.first_bad &&
           transition < scenario.first_bad + scenario.manipulated;
  };

  // The heuristic sampler weights transitions by the positive part of the
  // z-scored delta profile plus a floor. A flat profile (sigma ~ 0) falls
  // back to uniform sampling: leveling restores the uniform escape odds.
  std::vector<double> base_weights;
  bool heuristic = sampler == SamplerKind::weight_delta_heuristic;
  if (heuristic) {
    const std::vector<double>& deltas = scenario.deltas;
    if (deltas.empty()) raise(Errc::invalid_argument, "heuristic sampler needs a delta profile");
    double mean = 0.0;
    for (double d : deltas) mean += d;
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (double d : deltas) var += (d - mean) * (d - mean);
    var /= static_cast<double>(m);
    double sigma = std::sqrt(var);
    if (sigma <= 1e-9 * std::max(std::fabs(mean), 1.0)) {
      heuristic = false;
    } else {
      base_weights.resize(deltas.size());
      for (std::size_t i = 0; i < deltas.size(); ++i)
        base_weights[i] = std::max((deltas[i] - mean) / sigma, 0.0) + 0.1;
    }
  }

  AuditOutcome out;
  out.trials = trials;

  if (!heuristic) {
    // Uniform v-subsets via a Fisher-Yates prefix. The array persists across
    // trials: a fresh v-prefix of any permutation is uniform regardless of
    // the starting arrangement, so no reset is needed.
    std::vector<std::uint64_t> arr(static_cast<std::size_t>(m));
    std::iota(arr.begin(), arr.end(), std::uint64_t{1});
    for (std::uint64_t t = 0; t < trials; ++t) {
      Splitmix64 rng(Splitmix64::output_at(seed, t));
      bool detected = false;
      for (std::uint64_t i = 0; i < v; ++i) {
        std::uint64_t j = i + rng.below(m - i);
        std::swap(arr[static_cast<std::size_t>(i)], arr[static_cast<std::size_t>(j)]);
        if (is_bad(arr[static_cast<std::size_t>(i)])) detected = true;
      }
      if (detected) ++out.detections;
    }
  } else {
    // Sequential weighted sampling without replacement.
    std::vector<double> w(base_weights.size());
    for (std::uint64_t t = 0; t < trials; ++t) {
      Splitmix64 rng(Splitmix64::output_at(seed, t));
      std::copy(base_weights.begin(), base_weights.end(), w.begin());
      bool detected = false;
      for (std::uint64_t draw = 0; draw < v; ++draw) {
        double total = 0.0;
        for (double x : w) total += x;
        double x = rng.next_unit_f64() * total;
        std::size_t pick = 0;
        for (std::size_t i = 0; i < w.size(); ++i) {
          if (w[i] <= 0.0) continue;
          pick = i;
          x -= w[i];
          if (x < 0.0) break;
        }
        if (is_bad(static_cast<std::uint64_t>(pick) + 1)) detected = true;
        w[pick] = 0.0;
      }
      if (detected) ++out.detections;
    }
  }

  out.detection_rate = static_cast<double>(out.detections) / static_cast<double>(trials);
  out.detection_ci = wilson95(out.detections, trials);
  out.escape_rate = static_cast<double>(trials - out.detections) / static_cast<double>(trials);
  out.escape_ci = wilson95(trials - out.detections, trials);
  return out;
}

std::string simulation_csv_header() {
  return "m,v,a,kind,sampler,exact_p,approx_p,empirical_escape,ci_low,ci_high,trials,seed";
}

std::string simulation_csv_row(const AttackScenario& scenario, std::uint64_t v,
                               SamplerKind sampler, const AuditOutcome& outcome,
                               std::uint64_t seed) {
  double exact = escape_probability_exact(scenario.transitions, v, scenario.manipulated);
  double approx = escape_probability_approx(scenario.transitions, v, scenario.manipulated);
  char buf[384];
  std::snprintf(buf, sizeof(buf), "%llu,%llu,%llu,%s,%s,%.10g,%.10g,%.10g,%.10g,%.10g,%llu,%llu",
                static_cast<unsigned long long>(scenario.transitions),
                static_cast<unsigned long long>(v),
                static_cast<unsigned long long>(scenario.manipulated),
                attack_kind_name(scenario.kind), sampler_name(sampler), exact, approx,
                outcome.escape_rate, outcome.escape_ci.low, outcome.escape_ci.high,
                static_cast<unsigned long long>(outcome.trials),
                static_cast<unsigned long long>(seed));
  return std::string(buf);
}

}  // namespace tcat
