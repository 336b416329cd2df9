// Command-line front end. Talks to the core exclusively through the C API.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tcat/tcat.h"

namespace {

constexpr int kExitUsage = 2;

[[noreturn]] void die(tcat_status st) {
  std::cerr << "error: " << tcat_last_error() << " (" << tcat_status_name(st) << ")\n";
  std::exit(kExitUsage);
}

void check(tcat_status st) {
  if (st != TCAT_OK) die(st);
}

std::string call_string(tcat_status (*fn)(const tcat_report*, char*, size_t*),
                        const tcat_report* rep) {
  size_t len = 0;
  check(fn(rep, nullptr, &len));
  std::string out(len, '\0');
  check(fn(rep, out.data(), &len));
  out.resize(len - 1);
  return out;
}

bool parse_hex32(const std::string& hex, uint8_t out[32]) {
  if (hex.size() != 64) return false;
  auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  for (size_t i = 0; i < 32; ++i) {
    int hi = nib(hex[2 * i]), lo = nib(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) return false;
    out[i] = static_cast<uint8_t>((hi << 4) | lo);
  }
  return true;
}

std::vector<uint64_t> parse_arch(const std::string& text) {
  std::vector<uint64_t> sizes;
  std::istringstream is(text);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    try {
      sizes.push_back(std::stoull(tok));
    } catch (const std::exception&) {
      std::cerr << "error: bad layer size in --arch: " << tok << "\n";
      std::exit(kExitUsage);
    }
  }
  return sizes;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read " << path << "\n";
    std::exit(kExitUsage);
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    std::cerr << "error: cannot write " << path << "\n";
    std::exit(kExitUsage);
  }
  out << text;
}

std::string sample_plan_text(uint64_t m, uint64_t v, uint64_t seed) {
  size_t len = 0;
  check(tcat_sample_plan(m, v, seed, nullptr, &len));
  std::string out(len, '\0');
  check(tcat_sample_plan(m, v, seed, out.data(), &len));
  out.resize(len - 1);
  return out;
}

// Prints the report, writes it if asked, and exits with the verification
// outcome: 0 on pass, the failure code (10..15) otherwise.
[[noreturn]] void finish_verification(tcat_report* rep, const std::string& report_out) {
  std::string text = call_string(tcat_report_render, rep);
  std::cout << text;
  if (!report_out.empty()) write_text(report_out, text);
  int rc = tcat_report_overall(rep) ? 0 : tcat_report_first_failure(rep);
  tcat_report_free(rep);
  std::exit(rc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"training-run attestation toolkit"};
  app.set_version_flag("--version", tcat_version());
  app.require_subcommand(1);

  // keygen
  std::string kg_secret, kg_public, kg_seed;
  CLI::App* keygen = app.add_subcommand("keygen", "generate an Ed25519 signing key pair");
  keygen->add_option("--secret-out", kg_secret, "secret key output path")->required();
  keygen->add_option("--public-out", kg_public, "public key output path")->required();
  keygen->add_option("--seed", kg_seed, "32-byte hex seed for a deterministic key");

  // gen-data
  std::string gd_out;
  uint64_t gd_count = 0, gd_in = 0, gd_target = 0, gd_seed = 0;
  bool gd_class = false;
  CLI::App* gen = app.add_subcommand("gen-data", "generate a deterministic synthetic dataset");
  gen->add_option("--out", gd_out, "dataset output path")->required();
  gen->add_option("--count", gd_count, "number of items")->required();
  gen->add_option("--in-dim", gd_in, "input dimension")->required();
  gen->add_option("--target-dim", gd_target, "target dimension")->required();
  gen->add_flag("--classification", gd_class, "one-hot targets instead of regression");
  gen->add_option("--seed", gd_seed, "generator seed");

  // train
  std::string tr_data, tr_arch, tr_activation = "relu", tr_loss = "mse", tr_opt = "sgd";
  std::string tr_run_out, tr_model_out;
  uint64_t tr_steps = 0, tr_batch = 1, tr_init_seed = 0, tr_shuffle_seed = 0, tr_every = 0;
  float tr_lr = 0.01f, tr_momentum = 0.9f, tr_b1 = 0.9f, tr_b2 = 0.999f, tr_eps = 1e-8f;
  float tr_l2 = 0.0f, tr_scale = 0.5f;
  CLI::App* train = app.add_subcommand("train", "run deterministic training");
  train->add_option("--data", tr_data, "dataset path")->required();
  train->add_option("--arch", tr_arch, "layer sizes, e.g. 2,16,2")->required();
  train->add_option("--steps", tr_steps, "number of optimizer steps")->required();
  train->add_option("--activation", tr_activation, "identity | relu");
  train->add_option("--loss", tr_loss, "mse | softmax_cross_entropy");
  train->add_option("--optimizer", tr_opt, "sgd | momentum | adam");
  train->add_option("--lr", tr_lr, "learning rate");
  train->add_option("--momentum", tr_momentum, "momentum coefficient");
  train->add_option("--beta1", tr_b1, "Adam beta1");
  train->add_option("--beta2", tr_b2, "Adam beta2");
  train->add_option("--eps", tr_eps, "Adam epsilon");
  train->add_option("--l2", tr_l2, "L2 coefficient");
  train->add_option("--init-scale", tr_scale, "uniform init half-width");
  train->add_option("--batch", tr_batch, "batch size");
  train->add_option("--init-seed", tr_init_seed, "weight init seed");
  train->add_option("--shuffle-seed", tr_shuffle_seed, "schedule seed");
  train->add_option("--checkpoint-every", tr_every, "record a checkpoint every N steps");
  train->add_option("--run-out", tr_run_out, "run file output path");
  train->add_option("--model-out", tr_model_out, "final model output path");

  // attest
  std::string at_run, at_data, at_key, at_out, at_mode = "partial";
  uint64_t at_every = 0;
  uint16_t at_arity = 16;
  CLI::App* attest = app.add_subcommand("attest", "build and sign an attestation record");
  attest->add_option("--run", at_run, "run file path")->required();
  attest->add_option("--key", at_key, "secret key path")->required();
  attest->add_option("--out", at_out, "record output path")->required();
  attest->add_option("--mode", at_mode, "complete | partial");
  attest->add_option("--checkpoint-every", at_every,
                     "checkpoint spacing (0 = as recorded in the run)");
  attest->add_option("--arity", at_arity, "hash tree arity for bulk data");
  attest->add_option("--data", at_data, "dataset path (needed when replay materializes checkpoints)");

  // verify
  std::string vf_record, vf_model, vf_data, vf_pubkey, vf_bundle, vf_plan, vf_bundle_out,
      vf_report;
  uint64_t vf_sample = 0, vf_seed = 0;
  bool vf_have_seed = false;
  CLI::App* verify = app.add_subcommand("verify", "verify a record or a disclosure bundle");
  verify->add_option("--record", vf_record, "record path");
  verify->add_option("--model", vf_model, "claimed final model path (complete mode)");
  verify->add_option("--data", vf_data, "dataset path");
  verify->add_option("--pubkey", vf_pubkey, "signer public key path")->required();
  verify->add_option("--bundle", vf_bundle, "verify an existing disclosure bundle");
  verify->add_option("--plan", vf_plan, "audit plan path (with --bundle)");
  verify->add_option("--sample", vf_sample, "number of transitions to audit (partial mode)");
  verify->add_option("--seed", vf_seed, "verifier sampling seed (partial mode)")
      ->each([&vf_have_seed](const std::string&) { vf_have_seed = true; });
  verify->add_option("--bundle-out", vf_bundle_out, "keep the extracted bundle at this path");
  verify->add_option("--report", vf_report, "also write the report to this path");

  // sample-plan
  std::string sp_record, sp_out;
  uint64_t sp_m = 0, sp_v = 0, sp_seed = 0;
  CLI::App* plan = app.add_subcommand("sample-plan", "draw a transition audit plan");
  plan->add_option("--m", sp_m, "total transitions (or use --record)");
  plan->add_option("--record", sp_record, "partial record to read the transition count from");
  plan->add_option("--sample", sp_v, "number of transitions to audit")->required();
  plan->add_option("--seed", sp_seed, "verifier sampling seed")->required();
  plan->add_option("--out", sp_out, "write the plan here as well");

  // simulate
  std::string sm_attack = "data_substitution", sm_sampler = "uniform";
  uint64_t sm_m = 0, sm_v = 0, sm_a = 0, sm_first = 0, sm_trials = 10000, sm_seed = 1;
  double sm_factor = 8.0;
  bool sm_leveled = false, sm_header = false;
  CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo audit simulation (CSV output)");
  sim->add_option("--attack", sm_attack, "data_substitution | step_count_lie | leveling");
  sim->add_option("--sampler", sm_sampler, "uniform | weight_delta_heuristic");
  sim->add_option("--m", sm_m, "total transitions")->required();
  sim->add_option("--v", sm_v, "audited transitions per trial")->required();
  sim->add_option("--a", sm_a, "manipulated transitions")->required();
  sim->add_option("--first-bad", sm_first, "start of the manipulated range (default per attack)");
  sim->add_option("--anomaly-factor", sm_factor, "unleveled delta anomaly factor (leveling)");
  sim->add_flag("--leveled", sm_leveled, "attacker flattens the delta profile (leveling)");
  sim->add_option("--trials", sm_trials, "Monte Carlo trials");
  sim->add_option("--seed", sm_seed, "simulation seed");
  sim->add_flag("--header", sm_header, "print the CSV header line first");

  // estimate
  uint64_t es_params = 0, es_checkpoints = 0, es_bpp = 4;
  uint32_t es_arity = 16;
  std::string es_opt = "sgd";
  CLI::App* est = app.add_subcommand("estimate", "storage estimate for a partial record");
  est->add_option("--params", es_params, "model parameter count")->required();
  est->add_option("--checkpoints", es_checkpoints, "checkpoint count")->required();
  est->add_option("--arity", es_arity, "hash tree arity");
  est->add_option("--optimizer", es_opt, "sgd | momentum | adam");
  est->add_option("--bytes-per-param", es_bpp, "bytes per parameter");

  CLI11_PARSE(app, argc, argv);

  if (keygen->parsed()) {
    uint8_t seed[32];
    const uint8_t* seed_ptr = nullptr;
    if (!kg_seed.empty()) {
      if (!parse_hex32(kg_seed, seed)) {
        std::cerr << "error: --seed must be 64 hex characters\n";
        return kExitUsage;
      }
      seed_ptr = seed;
    }
    check(tcat_keygen(kg_secret.c_str(), kg_public.c_str(), seed_ptr));
    std::cout << "wrote " << kg_secret << " and " << kg_public << "\n";
    return 0;
  }

  if (gen->parsed()) {
    check(tcat_gen_dataset(gd_out.c_str(), gd_count, gd_in, gd_target, gd_class ? 1 : 0,
                           gd_seed));
    std::cout << "wrote " << gd_out << " (" << gd_count << " items)\n";
    return 0;
  }

  if (train->parsed()) {
    std::vector<uint64_t> sizes = parse_arch(tr_arch);
    tcat_train_config cfg;
    tcat_train_config_init(&cfg);
    cfg.layer_sizes = sizes.data();
    cfg.layer_count = sizes.size();
    cfg.activation = tr_activation.c_str();
    cfg.loss = tr_loss.c_str();
    cfg.optimizer = tr_opt.c_str();
    cfg.learning_rate = tr_lr;
    cfg.momentum_coef = tr_momentum;
    cfg.adam_beta1 = tr_b1;
    cfg.adam_beta2 = tr_b2;
    cfg.adam_eps = tr_eps;
    cfg.l2 = tr_l2;
    cfg.init_scale = tr_scale;
    cfg.batch_size = tr_batch;
    cfg.init_seed = tr_init_seed;
    cfg.shuffle_seed = tr_shuffle_seed;
    check(tcat_train(&cfg, tr_data.c_str(), tr_steps, tr_every,
                     tr_run_out.empty() ? nullptr : tr_run_out.c_str(),
                     tr_model_out.empty() ? nullptr : tr_model_out.c_str()));
    if (!tr_run_out.empty()) std::cout << "wrote " << tr_run_out << "\n";
    if (!tr_model_out.empty()) std::cout << "wrote " << tr_model_out << "\n";
    return 0;
  }

  if (attest->parsed()) {
    int partial;
    if (at_mode == "partial") {
      partial = 1;
    } else if (at_mode == "complete") {
      partial = 0;
    } else {
      std::cerr << "error: --mode must be complete or partial\n";
      return kExitUsage;
    }
    check(tcat_attest(at_run.c_str(), at_data.empty() ? nullptr : at_data.c_str(),
                      at_key.c_str(), partial, at_every, at_arity, at_out.c_str()));
    tcat_record* rec = nullptr;
    check(tcat_record_open(at_out.c_str(), &rec));
    tcat_record_info info;
    check(tcat_record_query(rec, &info));
    tcat_record_free(rec);
    std::cout << "wrote " << at_out << " mode=" << (info.mode_partial ? "partial" : "complete")
              << " transitions=" << info.transitions << " root=" << info.root_hex << "\n";
    return 0;
  }

  if (verify->parsed()) {
    tcat_report* rep = nullptr;
    if (!vf_bundle.empty()) {
      if (vf_plan.empty()) {
        std::cerr << "error: --bundle needs --plan\n";
        return kExitUsage;
      }
      std::string plan_text = read_text(vf_plan);
      check(tcat_verify_bundle(vf_bundle.c_str(), plan_text.c_str(), vf_pubkey.c_str(), &rep));
      finish_verification(rep, vf_report);
    }
    if (vf_record.empty()) {
      std::cerr << "error: give --record (with --model/--data) or --bundle --plan\n";
      return kExitUsage;
    }
    tcat_record* rec = nullptr;
    check(tcat_record_open(vf_record.c_str(), &rec));
    tcat_record_info info;
    check(tcat_record_query(rec, &info));
    tcat_record_free(rec);
    if (!info.mode_partial) {
      if (vf_model.empty() || vf_data.empty()) {
        std::cerr << "error: complete verification needs --model and --data\n";
        return kExitUsage;
      }
      check(tcat_verify_complete(vf_record.c_str(), vf_model.c_str(), vf_data.c_str(),
                                 vf_pubkey.c_str(), &rep));
      finish_verification(rep, vf_report);
    }
    // Partial record: sample a plan, extract the bundle, verify the bundle.
    if (vf_data.empty() || vf_sample == 0 || !vf_have_seed) {
      std::cerr << "error: partial verification needs --data, --sample and --seed\n";
      return kExitUsage;
    }
    std::string plan_text = sample_plan_text(info.transitions, vf_sample, vf_seed);
    std::string bundle_path = vf_bundle_out.empty() ? vf_record + ".bundle.tmp" : vf_bundle_out;
    check(tcat_build_bundle(vf_record.c_str(), vf_data.c_str(), plan_text.c_str(),
                            bundle_path.c_str()));
    tcat_status st = tcat_verify_bundle(bundle_path.c_str(), plan_text.c_str(),
                                        vf_pubkey.c_str(), &rep);
    if (vf_bundle_out.empty()) std::remove(bundle_path.c_str());
    check(st);
    finish_verification(rep, vf_report);
  }

  if (plan->parsed()) {
    if (!sp_record.empty()) {
      tcat_record* rec = nullptr;
      check(tcat_record_open(sp_record.c_str(), &rec));
      tcat_record_info info;
      check(tcat_record_query(rec, &info));
      tcat_record_free(rec);
      if (!info.mode_partial) {
        std::cerr << "error: --record must name a partial record\n";
        return kExitUsage;
      }
      sp_m = info.transitions;
    }
    if (sp_m == 0) {
      std::cerr << "error: give --m or --record\n";
      return kExitUsage;
    }
    std::string text = sample_plan_text(sp_m, sp_v, sp_seed);
    std::cout << text;
    if (!sp_out.empty()) write_text(sp_out, text);
    return 0;
  }

  if (sim->parsed()) {
    if (sm_header) std::cout << tcat_simulation_csv_header() << "\n";
    size_t len = 0;
    check(tcat_simulation_csv_row(sm_attack.c_str(), sm_sampler.c_str(), sm_m, sm_v, sm_a,
                                  sm_first, sm_factor, sm_leveled ? 1 : 0, sm_trials, sm_seed,
                                  nullptr, &len));
    std::string row(len, '\0');
    check(tcat_simulation_csv_row(sm_attack.c_str(), sm_sampler.c_str(), sm_m, sm_v, sm_a,
                                  sm_first, sm_factor, sm_leveled ? 1 : 0, sm_trials, sm_seed,
                                  row.data(), &len));
    row.resize(len - 1);
    std::cout << row << "\n";
    return 0;
  }

  if (est->parsed()) {
    tcat_storage_estimate e;
    check(tcat_estimate_storage(es_params, es_checkpoints, es_arity, es_opt.c_str(), es_bpp, &e));
    std::cout << "per_checkpoint_payload=" << e.per_checkpoint_payload << "\n"
              << "per_checkpoint_tree=" << e.per_checkpoint_tree << "\n"
              << "penultimate_level=" << e.penultimate_level << "\n"
              << "total_exact=" << e.total_exact << "\n"
              << "total_bound=" << e.total_bound << "\n";
    return 0;
  }

  return kExitUsage;
}
