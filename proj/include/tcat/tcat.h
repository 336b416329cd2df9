/* tcat: training-run attestation toolkit.
 *
 * C interface to the tcat core. All functions return a tcat_status; handles
 * are opaque and freed with their matching _free function. String outputs
 * use the two-call pattern: pass NULL/0 to query the needed size (including
 * the NUL terminator), then call again with a buffer.
 *
 * On any TCAT_ERR_* return, tcat_last_error() describes the failure; the
 * message is thread-local and valid until the next call on that thread.
 */

#ifndef TCAT_H
#define TCAT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  TCAT_OK = 0,

  /* Operational errors. */
  TCAT_ERR_ARGUMENT = 1,
  TCAT_ERR_IO = 2,
  TCAT_ERR_FORMAT = 3,
  TCAT_ERR_CRYPTO = 4,
  TCAT_ERR_INTERNAL = 5,
  TCAT_ERR_TRAINING = 6, /* non-finite loss during training or replay */

  /* Verification failure codes, as reported by tcat_report_first_failure.
   * These are never returned by API calls themselves: a verification that
   * runs to completion returns TCAT_OK and a report. */
  TCAT_CHECK_SIGNATURE = 10,
  TCAT_CHECK_TREE = 11,
  TCAT_CHECK_DATA_HASH = 12,
  TCAT_CHECK_REPLAY = 13,
  TCAT_CHECK_MEMBERSHIP = 14,
  TCAT_CHECK_INCOMPLETE = 15
} tcat_status;

const char* tcat_version(void);
const char* tcat_status_name(int status);
const char* tcat_last_error(void);

/* ---- keys ---------------------------------------------------------- */

/* seed32 may be NULL for a random key. */
tcat_status tcat_keygen(const char* secret_path, const char* public_path,
                        const uint8_t* seed32);

/* ---- datasets ------------------------------------------------------ */

tcat_status tcat_gen_dataset(const char* out_path, uint64_t count, uint64_t input_dim,
                             uint64_t target_dim, int classification, uint64_t seed);

/* ---- training ------------------------------------------------------ */

typedef struct {
  const uint64_t* layer_sizes;
  size_t layer_count;
  const char* activation; /* "identity" | "relu" */
  const char* loss;       /* "mse" | "softmax_cross_entropy" */
  const char* optimizer;  /* "sgd" | "momentum" | "adam" */
  float learning_rate;
  float momentum_coef;
  float adam_beta1;
  float adam_beta2;
  float adam_eps;
  float l2;
  float init_scale;
  uint64_t batch_size;
  uint64_t init_seed;
  uint64_t shuffle_seed;
} tcat_train_config;

/* Fills a config with the library defaults (sgd, lr 0.01, relu, mse, ...).
 * layer_sizes/layer_count stay NULL/0 and must be set by the caller. */
void tcat_train_config_init(tcat_train_config* cfg);

/* Trains for `steps` over the dataset, recording a checkpoint every
 * checkpoint_every steps (0 = endpoints only). run_out and model_out may
 * each be NULL to skip writing that artifact. */
tcat_status tcat_train(const tcat_train_config* cfg, const char* data_path, uint64_t steps,
                       uint64_t checkpoint_every, const char* run_out, const char* model_out);

/* ---- attestation --------------------------------------------------- */

/* Builds a signed record from a run file. mode_partial selects the
 * checkpoint-based record; checkpoint_every picks the checkpoint spacing
 * (0 = the spacing recorded in the run). data_path may be NULL when every
 * wanted checkpoint is already recorded in the run; it is required when
 * materializing checkpoints needs replay. */
tcat_status tcat_attest(const char* run_path, const char* data_path, const char* secret_key_path,
                        int mode_partial, uint64_t checkpoint_every, uint16_t tree_arity,
                        const char* record_out);

typedef struct tcat_record tcat_record;

typedef struct {
  int mode_partial;
  int is_signed;
  uint16_t tree_arity;
  uint64_t steps;
  uint64_t batch_size;
  uint64_t dataset_size;
  uint64_t param_count;
  uint64_t transitions; /* 0 for complete records */
  char root_hex[65];
} tcat_record_info;

tcat_status tcat_record_open(const char* path, tcat_record** out);
tcat_status tcat_record_query(const tcat_record* rec, tcat_record_info* out);
void tcat_record_free(tcat_record* rec);

/* ---- audit plans ---------------------------------------------------- */

/* Renders the plan for sampling `v` of `m` transitions under the verifier
 * seed. Two-call pattern on (buf, len). */
tcat_status tcat_sample_plan(uint64_t transitions_total, uint64_t sample_count,
                             uint64_t verifier_seed, char* buf, size_t* len);

/* ---- disclosure bundles --------------------------------------------- */

/* Extracts the evidence for the transitions named in the plan text from a
 * signed partial record into a self-contained bundle file. */
tcat_status tcat_build_bundle(const char* record_path, const char* data_path,
                              const char* plan_text, const char* bundle_out);

/* ---- verification ---------------------------------------------------- */

typedef struct tcat_report tcat_report;

/* Complete verification: signature, commitment recomputation, dataset
 * hashes, full replay against the model file. */
tcat_status tcat_verify_complete(const char* record_path, const char* model_path,
                                 const char* data_path, const char* public_key_path,
                                 tcat_report** out);

/* Partial verification from a bundle and the plan text alone. */
tcat_status tcat_verify_bundle(const char* bundle_path, const char* plan_text,
                               const char* public_key_path, tcat_report** out);

int tcat_report_overall(const tcat_report* rep);          /* 1 pass, 0 fail */
int tcat_report_first_failure(const tcat_report* rep);    /* TCAT_OK or TCAT_CHECK_* */
tcat_status tcat_report_render(const tcat_report* rep, char* buf, size_t* len);
void tcat_report_free(tcat_report* rep);

/* ---- audit calculus -------------------------------------------------- */

/* Escape probability for a manipulated transitions out of m under a uniform
 * audit of v; approximate != 0 selects exp(-a*v/m). */
tcat_status tcat_escape_probability(uint64_t m, uint64_t v, uint64_t a, int approximate,
                                    double* out);

typedef struct {
  uint64_t trials;
  uint64_t detections;
  double detection_rate;
  double detection_ci_low;
  double detection_ci_high;
  double escape_rate;
  double escape_ci_low;
  double escape_ci_high;
  double exact_p;
  double approx_p;
} tcat_sim_result;

/* Monte Carlo audit simulation.
 * attack: "data_substitution" | "step_count_lie" | "leveling"
 * sampler: "uniform" | "weight_delta_heuristic"
 * first_bad: 1-based start of the manipulated range (0 = kind default).
 * anomaly_factor/leveled only affect the leveling attack's delta profile. */
tcat_status tcat_simulate(const char* attack, const char* sampler, uint64_t m, uint64_t v,
                          uint64_t a, uint64_t first_bad, double anomaly_factor, int leveled,
                          uint64_t trials, uint64_t seed, tcat_sim_result* out);

const char* tcat_simulation_csv_header(void);
tcat_status tcat_simulation_csv_row(const char* attack, const char* sampler, uint64_t m,
                                    uint64_t v, uint64_t a, uint64_t first_bad,
                                    double anomaly_factor, int leveled, uint64_t trials,
                                    uint64_t seed, char* buf, size_t* len);

/* ---- storage estimates ----------------------------------------------- */

typedef struct {
  uint64_t per_checkpoint_payload;
  uint64_t per_checkpoint_tree;
  uint64_t penultimate_level;
  uint64_t total_exact;
  uint64_t total_bound;
} tcat_storage_estimate;

tcat_status tcat_estimate_storage(uint64_t param_count, uint64_t checkpoint_count,
                                  uint32_t tree_arity, const char* optimizer,
                                  uint64_t bytes_per_param, tcat_storage_estimate* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* TCAT_H */
