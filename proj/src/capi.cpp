#include "tcat/tcat.h"

#include <cstring>
#include <memory>
#include <string>

#include "attest.hpp"
#include "auditsim.hpp"
#include "bytes.hpp"
#include "dataset.hpp"
#include "detnet.hpp"
#include "error.hpp"
#include "runfile.hpp"
#include "sign.hpp"
#include "verify.hpp"

using namespace tcat;

extern "C" {

struct tcat_record {
  AttestationRecord rec;
};

struct tcat_report {
  VerificationReport rep;
};

}  // extern "C"

namespace {

thread_local std::string g_last_error;

tcat_status status_of(Errc c) {
  switch (c) {
    case Errc::invalid_argument: return TCAT_ERR_ARGUMENT;
    case Errc::io: return TCAT_ERR_IO;
    case Errc::format: return TCAT_ERR_FORMAT;
    case Errc::crypto: return TCAT_ERR_CRYPTO;
    case Errc::non_finite_loss: return TCAT_ERR_TRAINING;
    case Errc::internal: return TCAT_ERR_INTERNAL;
  }
  return TCAT_ERR_INTERNAL;
}

// Runs fn, routing exceptions into status codes and the thread-local error.
template <typename Fn>
tcat_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TCAT_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return TCAT_ERR_INTERNAL;
  }
}

tcat_status require(bool ok, const char* msg) {
  if (ok) return TCAT_OK;
  g_last_error = msg;
  return TCAT_ERR_ARGUMENT;
}

// Two-call string output: *len in = buffer capacity, out = needed size
// including the terminator.
tcat_status fill_buffer(const std::string& text, char* buf, size_t* len) {
  if (len == nullptr) return require(false, "length pointer is null");
  const size_t needed = text.size() + 1;
  if (buf == nullptr || *len < needed) {
    *len = needed;
    return buf == nullptr ? TCAT_OK : require(false, "buffer too small");
  }
  std::memcpy(buf, text.data(), text.size());
  buf[text.size()] = '\0';
  *len = needed;
  return TCAT_OK;
}

tcat_status failure_status(FailureCode c) {
  switch (c) {
    case FailureCode::none: return TCAT_OK;
    case FailureCode::signature_invalid: return TCAT_CHECK_SIGNATURE;
    case FailureCode::tree_mismatch: return TCAT_CHECK_TREE;
    case FailureCode::data_hash_mismatch: return TCAT_CHECK_DATA_HASH;
    case FailureCode::replay_mismatch: return TCAT_CHECK_REPLAY;
    case FailureCode::membership_fail: return TCAT_CHECK_MEMBERSHIP;
    case FailureCode::incomplete_disclosure: return TCAT_CHECK_INCOMPLETE;
  }
  return TCAT_ERR_INTERNAL;
}

TrainConfig convert_config(const tcat_train_config& c) {
  if (c.layer_sizes == nullptr || c.layer_count < 2)
    raise(Errc::invalid_argument, "config needs at least two layer sizes");
  if (c.activation == nullptr || c.loss == nullptr || c.optimizer == nullptr)
    raise(Errc::invalid_argument, "config enum fields must not be null");
  TrainConfig cfg;
  cfg.arch.layer_sizes.assign(c.layer_sizes, c.layer_sizes + c.layer_count);
  cfg.arch.activation = activation_from_name(c.activation);
  cfg.arch.loss = loss_from_name(c.loss);
  cfg.optimizer = optimizer_from_name(c.optimizer);
  cfg.learning_rate = c.learning_rate;
  cfg.momentum_coef = c.momentum_coef;
  cfg.adam_beta1 = c.adam_beta1;
  cfg.adam_beta2 = c.adam_beta2;
  cfg.adam_eps = c.adam_eps;
  cfg.l2 = c.l2;
  cfg.init_scale = c.init_scale;
  cfg.batch_size = c.batch_size;
  cfg.init_seed = c.init_seed;
  cfg.shuffle_seed = c.shuffle_seed;
  cfg.validate();
  return cfg;
}

}  // namespace

extern "C" {

const char* tcat_version(void) { return "1.0.0"; }

const char* tcat_status_name(int status) {
  switch (status) {
    case TCAT_OK: return "ok";
    case TCAT_ERR_ARGUMENT: return "argument-error";
    case TCAT_ERR_IO: return "io-error";
    case TCAT_ERR_FORMAT: return "format-error";
    case TCAT_ERR_CRYPTO: return "crypto-error";
    case TCAT_ERR_INTERNAL: return "internal-error";
    case TCAT_ERR_TRAINING: return "training-error";
    case TCAT_CHECK_SIGNATURE: return "SignatureInvalid";
    case TCAT_CHECK_TREE: return "TreeMismatch";
    case TCAT_CHECK_DATA_HASH: return "DataHashMismatch";
    case TCAT_CHECK_REPLAY: return "ReplayMismatch";
    case TCAT_CHECK_MEMBERSHIP: return "MembershipFail";
    case TCAT_CHECK_INCOMPLETE: return "IncompleteDisclosure";
    default: return "unknown";
  }
}

const char* tcat_last_error(void) { return g_last_error.c_str(); }

tcat_status tcat_keygen(const char* secret_path, const char* public_path,
                        const uint8_t* seed32) {
  return guarded([&]() {
    if (secret_path == nullptr || public_path == nullptr)
      raise(Errc::invalid_argument, "key paths must not be null");
    KeyPair kp;
    if (seed32 != nullptr) {
      kp = keypair_from_seed(std::span<const std::uint8_t, 32>(seed32, 32));
    } else {
      kp = generate_keypair();
    }
    write_secret_key_file(secret_path, kp);
    write_public_key_file(public_path, kp.public_key);
    return TCAT_OK;
  });
}

tcat_status tcat_gen_dataset(const char* out_path, uint64_t count, uint64_t input_dim,
                             uint64_t target_dim, int classification, uint64_t seed) {
  return guarded([&]() {
    if (out_path == nullptr) raise(Errc::invalid_argument, "output path must not be null");
    std::vector<Bytes> payloads =
        generate_synthetic_payloads(count, input_dim, target_dim, classification != 0, seed);
    write_dataset_file(out_path, payloads);
    return TCAT_OK;
  });
}

void tcat_train_config_init(tcat_train_config* cfg) {
  if (cfg == nullptr) return;
  std::memset(cfg, 0, sizeof(*cfg));
  TrainConfig d;
  cfg->activation = "relu";
  cfg->loss = "mse";
  cfg->optimizer = "sgd";
  cfg->learning_rate = d.learning_rate;
  cfg->momentum_coef = d.momentum_coef;
  cfg->adam_beta1 = d.adam_beta1;
  cfg->adam_beta2 = d.adam_beta2;
  cfg->adam_eps = d.adam_eps;
  cfg->l2 = d.l2;
  cfg->init_scale = d.init_scale;
  cfg->batch_size = d.batch_size;
}

tcat_status tcat_train(const tcat_train_config* cfg, const char* data_path, uint64_t steps,
                       uint64_t checkpoint_every, const char* run_out, const char* model_out) {
  return guarded([&]() {
    if (cfg == nullptr || data_path == nullptr)
      raise(Errc::invalid_argument, "config and data path must not be null");
    TrainConfig c = convert_config(*cfg);
    std::vector<Bytes> payloads = read_dataset_file(data_path);
    TrainRun run = run_training(c, steps, payloads, checkpoint_every);
    if (run_out != nullptr) write_run_file(run_out, run);
    if (model_out != nullptr) write_model_file(model_out, c.optimizer, as_view(run.final_state));
    return TCAT_OK;
  });
}

tcat_status tcat_attest(const char* run_path, const char* data_path, const char* secret_key_path,
                        int mode_partial, uint64_t checkpoint_every, uint16_t tree_arity,
                        const char* record_out) {
  return guarded([&]() {
    if (run_path == nullptr || secret_key_path == nullptr || record_out == nullptr)
      raise(Errc::invalid_argument, "run, key and output paths must not be null");
    TrainRun run = read_run_file(run_path);
    KeyPair kp = read_secret_key_file(secret_key_path);
    std::vector<Bytes> payloads;
    if (data_path != nullptr) payloads = read_dataset_file(data_path);

    AttestationRecord rec;
    if (mode_partial != 0) {
      std::vector<Checkpoint> cps = checkpoints_at_spacing(run, payloads, checkpoint_every);
      rec = build_partial_record(run.config, run.steps, run.manifest, run.schedule,
                                 std::move(cps), tree_arity);
    } else {
      rec = build_complete_record(run.config, run.steps, run.manifest, run.schedule,
                                  as_view(run.initial_state), tree_arity);
    }
    sign_record(rec, kp);
    write_record_file(record_out, rec);
    return TCAT_OK;
  });
}

tcat_status tcat_record_open(const char* path, tcat_record** out) {
  return guarded([&]() {
    if (path == nullptr || out == nullptr)
      raise(Errc::invalid_argument, "path and out pointer must not be null");
    auto handle = std::make_unique<tcat_record>();
    handle->rec = read_record_file(path);
    *out = handle.release();
    return TCAT_OK;
  });
}

tcat_status tcat_record_query(const tcat_record* rec, tcat_record_info* out) {
  return guarded([&]() {
    if (rec == nullptr || out == nullptr)
      raise(Errc::invalid_argument, "record and out pointer must not be null");
    std::memset(out, 0, sizeof(*out));
    out->mode_partial = rec->rec.mode == RecordMode::partial ? 1 : 0;
    out->is_signed = rec->rec.is_signed ? 1 : 0;
    out->tree_arity = rec->rec.bulk_arity;
    out->steps = rec->rec.steps;
    out->batch_size = rec->rec.batch_size;
    out->dataset_size = rec->rec.dataset_size;
    out->param_count = rec->rec.param_count;
    out->transitions = rec->rec.mode == RecordMode::partial ? rec->rec.transitions() : 0;
    std::string hex = rec->rec.root.hex();
    std::memcpy(out->root_hex, hex.data(), 64);
    out->root_hex[64] = '\0';
    return TCAT_OK;
  });
}

void tcat_record_free(tcat_record* rec) { delete rec; }

tcat_status tcat_sample_plan(uint64_t transitions_total, uint64_t sample_count,
                             uint64_t verifier_seed, char* buf, size_t* len) {
  return guarded([&]() {
    AuditPlan plan = sample_transitions(transitions_total, sample_count, verifier_seed);
    return fill_buffer(render_plan(plan), buf, len);
  });
}

tcat_status tcat_build_bundle(const char* record_path, const char* data_path,
                              const char* plan_text, const char* bundle_out) {
  return guarded([&]() {
    if (record_path == nullptr || data_path == nullptr || plan_text == nullptr ||
        bundle_out == nullptr)
      raise(Errc::invalid_argument, "record, data, plan and output must not be null");
    AttestationRecord rec = read_record_file(record_path);
    std::vector<Bytes> payloads = read_dataset_file(data_path);
    AuditPlan plan = parse_plan(plan_text);
    DisclosureBundle bundle = build_disclosure_bundle(rec, payloads, plan.sampled);
    write_bundle_file(bundle_out, bundle);
    return TCAT_OK;
  });
}

tcat_status tcat_verify_complete(const char* record_path, const char* model_path,
                                 const char* data_path, const char* public_key_path,
                                 tcat_report** out) {
  return guarded([&]() {
    if (record_path == nullptr || model_path == nullptr || data_path == nullptr ||
        public_key_path == nullptr || out == nullptr)
      raise(Errc::invalid_argument, "all paths and the out pointer must not be null");
    AttestationRecord rec = read_record_file(record_path);
    auto [kind, state] = read_model_file(model_path);
    std::vector<Bytes> payloads = read_dataset_file(data_path);
    PublicKey pk = read_public_key_file(public_key_path);
    auto handle = std::make_unique<tcat_report>();
    handle->rep = verify_complete(rec, as_view(state), payloads, pk);
    *out = handle.release();
    return TCAT_OK;
  });
}

tcat_status tcat_verify_bundle(const char* bundle_path, const char* plan_text,
                               const char* public_key_path, tcat_report** out) {
  return guarded([&]() {
    if (bundle_path == nullptr || plan_text == nullptr || public_key_path == nullptr ||
        out == nullptr)
      raise(Errc::invalid_argument, "bundle, plan, key and out must not be null");
    DisclosureBundle bundle = read_bundle_file(bundle_path);
    AuditPlan plan = parse_plan(plan_text);
    PublicKey pk = read_public_key_file(public_key_path);
    auto handle = std::make_unique<tcat_report>();
    handle->rep = verify_transitions(bundle, plan, pk);
    *out = handle.release();
    return TCAT_OK;
  });
}

int tcat_report_overall(const tcat_report* rep) {
  return rep != nullptr && rep->rep.overall ? 1 : 0;
}

int tcat_report_first_failure(const tcat_report* rep) {
  if (rep == nullptr) return TCAT_ERR_ARGUMENT;
  return failure_status(rep->rep.first_failure);
}

tcat_status tcat_report_render(const tcat_report* rep, char* buf, size_t* len) {
  return guarded([&]() {
    if (rep == nullptr) raise(Errc::invalid_argument, "report must not be null");
    return fill_buffer(rep->rep.render(), buf, len);
  });
}

void tcat_report_free(tcat_report* rep) { delete rep; }

tcat_status tcat_escape_probability(uint64_t m, uint64_t v, uint64_t a, int approximate,
                                    double* out) {
  return guarded([&]() {
    if (out == nullptr) raise(Errc::invalid_argument, "out pointer must not be null");
    *out = approximate != 0 ? escape_probability_approx(m, v, a)
                            : escape_probability_exact(m, v, a);
    return TCAT_OK;
  });
}

namespace {

AttackScenario scenario_from_args(const char* attack, uint64_t m, uint64_t a,
                                  uint64_t first_bad, double anomaly_factor, int leveled) {
  if (attack == nullptr) raise(Errc::invalid_argument, "attack kind must not be null");
  AttackKind kind = attack_kind_from_name(attack);
  switch (kind) {
    case AttackKind::data_substitution:
      return make_data_substitution(m, a, first_bad == 0 ? 1 : first_bad);
    case AttackKind::step_count_lie:
      return make_step_count_lie(m, a == 0 ? 1 : a);
    case AttackKind::leveling:
      return make_leveling(m, a, first_bad == 0 ? (m / 2 == 0 ? 1 : m / 2) : first_bad, 1.0,
                           anomaly_factor < 1.0 ? 8.0 : anomaly_factor, leveled != 0);
  }
  raise(Errc::invalid_argument, "unknown attack kind");
}

}  // namespace

tcat_status tcat_simulate(const char* attack, const char* sampler, uint64_t m, uint64_t v,
                          uint64_t a, uint64_t first_bad, double anomaly_factor, int leveled,
                          uint64_t trials, uint64_t seed, tcat_sim_result* out) {
  return guarded([&]() {
    if (out == nullptr || sampler == nullptr)
      raise(Errc::invalid_argument, "sampler and out must not be null");
    AttackScenario sc = scenario_from_args(attack, m, a, first_bad, anomaly_factor, leveled);
    AuditOutcome o = simulate_audit(sc, v, sampler_from_name(sampler), trials, seed);
    out->trials = o.trials;
    out->detections = o.detections;
    out->detection_rate = o.detection_rate;
    out->detection_ci_low = o.detection_ci.low;
    out->detection_ci_high = o.detection_ci.high;
    out->escape_rate = o.escape_rate;
    out->escape_ci_low = o.escape_ci.low;
    out->escape_ci_high = o.escape_ci.high;
    out->exact_p = escape_probability_exact(sc.transitions, v, sc.manipulated);
    out->approx_p = escape_probability_approx(sc.transitions, v, sc.manipulated);
    return TCAT_OK;
  });
}

const char* tcat_simulation_csv_header(void) {
  static const std::string header = simulation_csv_header();
  return header.c_str();
}

tcat_status tcat_simulation_csv_row(const char* attack, const char* sampler, uint64_t m,
                                    uint64_t v, uint64_t a, uint64_t first_bad,
                                    double anomaly_factor, int leveled, uint64_t trials,
                                    uint64_t seed, char* buf, size_t* len) {
  return guarded([&]() {
    if (sampler == nullptr) raise(Errc::invalid_argument, "sampler must not be null");
    AttackScenario sc = scenario_from_args(attack, m, a, first_bad, anomaly_factor, leveled);
    SamplerKind sk = sampler_from_name(sampler);
    AuditOutcome o = simulate_audit(sc, v, sk, trials, seed);
    return fill_buffer(simulation_csv_row(sc, v, sk, o, seed), buf, len);
  });
}

tcat_status tcat_estimate_storage(uint64_t param_count, uint64_t checkpoint_count,
                                  uint32_t tree_arity, const char* optimizer,
                                  uint64_t bytes_per_param, tcat_storage_estimate* out) {
  return guarded([&]() {
    if (out == nullptr || optimizer == nullptr)
      raise(Errc::invalid_argument, "optimizer and out must not be null");
    StorageEstimate e = estimate_storage(param_count, checkpoint_count, tree_arity,
                                         optimizer_from_name(optimizer),
                                         bytes_per_param == 0 ? 4 : bytes_per_param);
    out->per_checkpoint_payload = e.per_checkpoint_payload;
    out->per_checkpoint_tree = e.per_checkpoint_tree;
    out->penultimate_level = e.penultimate_level;
    out->total_exact = e.total_exact;
    out->total_bound = e.total_bound;
    return TCAT_OK;
  });
}

}  // extern "C"
