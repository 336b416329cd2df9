#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "doctest.h"
#include "tcat/tcat.h"
#include "test_util.hpp"

namespace {

std::string two_call(tcat_status (*fn)(const tcat_report*, char*, size_t*),
                     const tcat_report* rep) {
  size_t len = 0;
  REQUIRE(fn(rep, nullptr, &len) == TCAT_OK);
  std::string out(len, '\0');
  REQUIRE(fn(rep, out.data(), &len) == TCAT_OK);
  out.resize(len - 1);
  return out;
}

// One trained-and-attested setup shared by the API tests.
struct Pipeline {
  ScratchDir dir;
  std::string sk = dir.file("sk.pem");
  std::string pk = dir.file("pk.pem");
  std::string data = dir.file("data.tcds");
  std::string run = dir.file("run.tcrn");
  std::string model = dir.file("model.tcms");
  std::string rec_complete = dir.file("complete.tcat");
  std::string rec_partial = dir.file("partial.tcat");

  Pipeline() {
    unsigned char seed[32];
    std::memset(seed, 0x5a, sizeof seed);
    REQUIRE(tcat_keygen(sk.c_str(), pk.c_str(), seed) == TCAT_OK);
    REQUIRE(tcat_gen_dataset(data.c_str(), 16, 2, 2, 0, 77) == TCAT_OK);

    uint64_t sizes[3] = {2, 4, 2};
    tcat_train_config cfg;
    tcat_train_config_init(&cfg);
    cfg.layer_sizes = sizes;
    cfg.layer_count = 3;
    cfg.learning_rate = 0.05f;
    cfg.batch_size = 2;
    cfg.init_seed = 42;
    cfg.shuffle_seed = 9;
    REQUIRE(tcat_train(&cfg, data.c_str(), 12, 4, run.c_str(), model.c_str()) == TCAT_OK);
    REQUIRE(tcat_attest(run.c_str(), nullptr, sk.c_str(), 0, 0, 16,
                        rec_complete.c_str()) == TCAT_OK);
    REQUIRE(tcat_attest(run.c_str(), nullptr, sk.c_str(), 1, 0, 16,
                        rec_partial.c_str()) == TCAT_OK);
  }
};

Pipeline& pipeline() {
  static Pipeline p;
  return p;
}

}  // namespace

TEST_CASE("version and status names are stable strings") {
  CHECK(tcat_version() != nullptr);
  CHECK(std::string(tcat_status_name(TCAT_OK)) == "ok");
  CHECK(std::string(tcat_status_name(TCAT_CHECK_REPLAY)) == "ReplayMismatch");
  CHECK(tcat_status_name(static_cast<tcat_status>(999)) != nullptr);
}

TEST_CASE("seeded key generation is deterministic") {
  ScratchDir dir;
  unsigned char seed[32];
  std::memset(seed, 0x11, sizeof seed);
  REQUIRE(tcat_keygen(dir.file("a.sk").c_str(), dir.file("a.pk").c_str(), seed) == TCAT_OK);
  REQUIRE(tcat_keygen(dir.file("b.sk").c_str(), dir.file("b.pk").c_str(), seed) == TCAT_OK);

  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(slurp(dir.file("a.sk")) == slurp(dir.file("b.sk")));
  CHECK(slurp(dir.file("a.pk")) == slurp(dir.file("b.pk")));
  CHECK(slurp(dir.file("a.pk")).find("PUBLIC KEY") != std::string::npos);
}

TEST_CASE("record queries expose the committed shape") {
  Pipeline& p = pipeline();
  tcat_record* rec = nullptr;
  REQUIRE(tcat_record_open(p.rec_partial.c_str(), &rec) == TCAT_OK);
  tcat_record_info info;
  REQUIRE(tcat_record_query(rec, &info) == TCAT_OK);
  CHECK(info.mode_partial == 1);
  CHECK(info.is_signed == 1);
  CHECK(info.tree_arity == 16);
  CHECK(info.steps == 12);
  CHECK(info.batch_size == 2);
  CHECK(info.dataset_size == 16);
  CHECK(info.param_count == 22);  // 2*4+4 + 4*2+2
  CHECK(info.transitions == 3);   // checkpoints at 0, 4, 8, 12
  CHECK(std::strlen(info.root_hex) == 64);
  tcat_record_free(rec);

  tcat_record* crec = nullptr;
  REQUIRE(tcat_record_open(p.rec_complete.c_str(), &crec) == TCAT_OK);
  tcat_record_info cinfo;
  REQUIRE(tcat_record_query(crec, &cinfo) == TCAT_OK);
  CHECK(cinfo.mode_partial == 0);
  CHECK(cinfo.transitions == 0);
  tcat_record_free(crec);
}

TEST_CASE("complete verification passes through the C boundary") {
  Pipeline& p = pipeline();
  tcat_report* rep = nullptr;
  REQUIRE(tcat_verify_complete(p.rec_complete.c_str(), p.model.c_str(), p.data.c_str(),
                               p.pk.c_str(), &rep) == TCAT_OK);
  CHECK(tcat_report_overall(rep) == 1);
  CHECK(tcat_report_first_failure(rep) == TCAT_OK);
  std::string text = two_call(tcat_report_render, rep);
  CHECK(text.find("overall=pass") != std::string::npos);
  tcat_report_free(rep);
}

TEST_CASE("sampling, bundling and bundle verification round-trip") {
  Pipeline& p = pipeline();
  size_t len = 0;
  REQUIRE(tcat_sample_plan(3, 2, 99, nullptr, &len) == TCAT_OK);
  std::vector<char> plan(len);
  REQUIRE(tcat_sample_plan(3, 2, 99, plan.data(), &len) == TCAT_OK);
  CHECK(std::string(plan.data()).find("tcat-plan v1") == 0);

  std::string bundle = p.dir.file("b.tcdb");
  REQUIRE(tcat_build_bundle(p.rec_partial.c_str(), p.data.c_str(), plan.data(),
                            bundle.c_str()) == TCAT_OK);

  tcat_report* rep = nullptr;
  REQUIRE(tcat_verify_bundle(bundle.c_str(), plan.data(), p.pk.c_str(), &rep) == TCAT_OK);
  CHECK(tcat_report_overall(rep) == 1);
  tcat_report_free(rep);

  // The wrong key still yields a report, with the failure coded.
  std::string sk2 = p.dir.file("o.sk"), pk2 = p.dir.file("o.pk");
  unsigned char seed[32];
  std::memset(seed, 0x77, sizeof seed);
  REQUIRE(tcat_keygen(sk2.c_str(), pk2.c_str(), seed) == TCAT_OK);
  REQUIRE(tcat_verify_bundle(bundle.c_str(), plan.data(), pk2.c_str(), &rep) == TCAT_OK);
  CHECK(tcat_report_overall(rep) == 0);
  CHECK(tcat_report_first_failure(rep) == TCAT_CHECK_SIGNATURE);
  tcat_report_free(rep);
}

TEST_CASE("undersized buffers report the needed length") {
  Pipeline& p = pipeline();
  size_t len = 0;
  REQUIRE(tcat_sample_plan(10, 3, 1, nullptr, &len) == TCAT_OK);
  CHECK(len > 1);
  size_t small = 1;
  char byte = 0;
  CHECK(tcat_sample_plan(10, 3, 1, &byte, &small) == TCAT_ERR_ARGUMENT);
  CHECK(small == len);  // corrected to the needed size
}

TEST_CASE("io and argument errors are distinguished and described") {
  tcat_record* rec = nullptr;
  CHECK(tcat_record_open("/nonexistent/rec.tcat", &rec) == TCAT_ERR_IO);
  CHECK(std::strlen(tcat_last_error()) > 0);
  CHECK(tcat_record_open(nullptr, &rec) == TCAT_ERR_ARGUMENT);

  tcat_train_config cfg;
  tcat_train_config_init(&cfg);
  uint64_t sizes[2] = {2, 2};
  cfg.layer_sizes = sizes;
  cfg.layer_count = 2;
  cfg.activation = "tanh";  // unsupported
  Pipeline& p = pipeline();
  CHECK(tcat_train(&cfg, p.data.c_str(), 4, 0, nullptr, nullptr) == TCAT_ERR_ARGUMENT);

  // A dataset file that is not a dataset file.
  ScratchDir dir;
  std::string junk = dir.file("junk.tcds");
  std::ofstream(junk, std::ios::binary) << "not a container";
  tcat_train_config_init(&cfg);
  cfg.layer_sizes = sizes;
  cfg.layer_count = 2;
  CHECK(tcat_train(&cfg, junk.c_str(), 4, 0, nullptr, nullptr) == TCAT_ERR_FORMAT);
}

TEST_CASE("probability and simulation answers cross the boundary unchanged") {
  double p = 0.0;
  REQUIRE(tcat_escape_probability(2500, 50, 5, 0, &p) == TCAT_OK);
  CHECK(p == doctest::Approx(0.9038469207946993).epsilon(1e-12));
  REQUIRE(tcat_escape_probability(2500, 50, 5, 1, &p) == TCAT_OK);
  CHECK(p == doctest::Approx(0.9048374180359595).epsilon(1e-12));
  CHECK(tcat_escape_probability(10, 20, 1, 0, &p) == TCAT_ERR_ARGUMENT);

  tcat_sim_result sim;
  REQUIRE(tcat_simulate("data_substitution", "uniform", 400, 10, 4, 0, 0.0, 0, 2000, 7,
                        &sim) == TCAT_OK);
  CHECK(sim.trials == 2000);
  CHECK(sim.detections + static_cast<uint64_t>(sim.escape_rate * 2000 + 0.5) == 2000);
  CHECK(sim.exact_p == doctest::Approx(0.9033383190264309).epsilon(1e-12));
  CHECK(sim.escape_ci_low < sim.escape_rate);
  CHECK(sim.escape_rate < sim.escape_ci_high);

  CHECK(tcat_simulate("bogus", "uniform", 10, 2, 1, 0, 0.0, 0, 10, 1, &sim) ==
        TCAT_ERR_ARGUMENT);
}

TEST_CASE("storage estimates cross the boundary unchanged") {
  tcat_storage_estimate e;
  REQUIRE(tcat_estimate_storage(1ull << 27, 100, 16, "sgd", 0, &e) == TCAT_OK);
  CHECK(e.per_checkpoint_payload == (1ull << 29));
  CHECK(e.penultimate_level == (1ull << 28));
  CHECK(e.total_bound == 100ull * (1ull << 30));
  REQUIRE(tcat_estimate_storage(1ull << 27, 100, 16, "adam", 0, &e) == TCAT_OK);
  CHECK(e.per_checkpoint_payload == (1ull << 30));
  CHECK(tcat_estimate_storage(8, 2, 16, "rmsprop", 0, &e) == TCAT_ERR_ARGUMENT);
}
