#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include "detmath.hpp"
#include "detnet.hpp"
#include "doctest.h"
#include "error.hpp"
#include "prng.hpp"

using namespace tcat;

namespace {

TrainConfig small_config(std::vector<std::uint64_t> sizes, Activation act, Loss loss,
                         OptimizerKind opt) {
  TrainConfig cfg;
  cfg.arch.layer_sizes = std::move(sizes);
  cfg.arch.activation = act;
  cfg.arch.loss = loss;
  cfg.optimizer = opt;
  return cfg;
}

SampleLookup lookup_of(const std::vector<Sample>& pool) {
  return [&pool](std::uint64_t index) -> const Sample& { return pool.at(index - 1); };
}

}  // namespace

TEST_CASE("splitmix64 emits the reference stream") {
  Splitmix64 rng(42);
  CHECK(rng.next() == 0xbdd732262feb6e95ULL);
  CHECK(rng.next() == 0x28efe333b266f103ULL);
  CHECK(rng.next() == 0x47526757130f9f52ULL);
  CHECK(rng.next() == 0x581ce1ff0e4ae394ULL);
}

TEST_CASE("splitmix64 random access matches sequential draws") {
  Splitmix64 rng(0xfeedULL);
  for (std::uint64_t i = 0; i < 20; ++i)
    CHECK(Splitmix64::output_at(0xfeedULL, i) == rng.next());
}

TEST_CASE("unit floats stay in [0, 1) and are 2^-24 grained") {
  Splitmix64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    float u = rng.next_unit_f32();
    CHECK(u >= 0.0f);
    CHECK(u < 1.0f);
    float scaled = u * 16777216.0f;
    CHECK(scaled == std::floor(scaled));
  }
}

TEST_CASE("model initialization is bit-stable") {
  ArchSpec arch;
  arch.layer_sizes = {2, 3, 1};
  ModelState s = init_model(arch, 42, 0.5f, OptimizerKind::sgd);
  REQUIRE(s.weights.size() == 13);

  const std::uint32_t expected[13] = {
      0x3e775cc8, 0xbeae203a, 0xbe62b664, 0xbe1f8c7c, 0xbeec8750, 0x3ebc8862, 0xbe902d32,
      0x3e99ec6a, 0xbe23e920, 0x3df2a6b8, 0xbe97171c, 0xbbe5bb00, 0x3c5b7b40,
  };
  for (int i = 0; i < 13; ++i) CHECK(std::bit_cast<std::uint32_t>(s.weights[i]) == expected[i]);

  CHECK(s.step_index == 0);
  CHECK(s.adam_t == 0);
  CHECK(s.opt_m.empty());
  CHECK(s.opt_v.empty());
}

TEST_CASE("zero init scale gives positive zero weights") {
  ArchSpec arch;
  arch.layer_sizes = {4, 4};
  ModelState s = init_model(arch, 9, 0.0f, OptimizerKind::sgd);
  for (float w : s.weights) {
    CHECK(w == 0.0f);
    CHECK_FALSE(std::signbit(w));
  }
}

TEST_CASE("optimizer kind shapes the auxiliary state") {
  ArchSpec arch;
  arch.layer_sizes = {2, 2};
  ModelState m = init_model(arch, 1, 0.5f, OptimizerKind::momentum);
  CHECK(m.opt_m.size() == m.weights.size());
  CHECK(m.opt_v.empty());
  ModelState a = init_model(arch, 1, 0.5f, OptimizerKind::adam);
  CHECK(a.opt_m.size() == a.weights.size());
  CHECK(a.opt_v.size() == a.weights.size());
}

TEST_CASE("state bytes round-trip for every optimizer") {
  ArchSpec arch;
  arch.layer_sizes = {3, 2};
  for (OptimizerKind k : {OptimizerKind::sgd, OptimizerKind::momentum, OptimizerKind::adam}) {
    ModelState s = init_model(arch, 5, 0.5f, k);
    s.step_index = 12;
    if (k == OptimizerKind::adam) s.adam_t = 12;
    Bytes b = s.canonical_bytes(k);
    ModelState back = ModelState::from_bytes(as_view(b), k);
    CHECK(back.canonical_bytes(k) == b);
    CHECK(back.step_index == 12);
  }
}

TEST_CASE("one linear sgd step matches hand arithmetic exactly") {
  // One affine unit, x = 1, y = 0, w = 0.5, b = 0.25, lr = 0.125, all values
  // exactly representable so the comparisons are equality, not tolerance.
  TrainConfig cfg =
      small_config({1, 1}, Activation::identity, Loss::mse, OptimizerKind::sgd);
  cfg.learning_rate = 0.125f;
  ModelState s = init_model(cfg.arch, 0, 0.0f, cfg.optimizer);
  s.weights = {0.5f, 0.25f};

  std::vector<Sample> batch{{{1.0f}, {0.0f}}};
  std::vector<float> grad;
  float loss = batch_gradient(s, batch, cfg, grad);
  CHECK(loss == 0.5625f);  // (0.75)^2
  REQUIRE(grad.size() == 2);
  CHECK(grad[0] == 1.5f);  // 2 * d * x
  CHECK(grad[1] == 1.5f);  // 2 * d

  ModelState s1 = train_step(s, batch, cfg);
  CHECK(s1.weights[0] == 0.3125f);
  CHECK(s1.weights[1] == 0.0625f);
  CHECK(s1.step_index == 1);
  CHECK(s.weights[0] == 0.5f);  // input untouched

  ModelState s2 = train_step(s1, batch, cfg);
  CHECK(s2.weights[0] == 0.21875f);
  CHECK(s2.weights[1] == -0.03125f);
}

TEST_CASE("momentum accumulates velocity exactly") {
  TrainConfig cfg =
      small_config({1, 1}, Activation::identity, Loss::mse, OptimizerKind::momentum);
  cfg.learning_rate = 0.125f;
  cfg.momentum_coef = 0.5f;
  ModelState s = init_model(cfg.arch, 0, 0.0f, cfg.optimizer);
  s.weights = {0.5f, 0.25f};

  std::vector<Sample> batch{{{1.0f}, {0.0f}}};
  ModelState s1 = train_step(s, batch, cfg);
  // First step: velocity = gradient, same as plain sgd.
  CHECK(s1.weights[0] == 0.3125f);
  CHECK(s1.opt_m[0] == 1.5f);

  ModelState s2 = train_step(s1, batch, cfg);
  // g = 0.75, velocity = 0.5 * 1.5 + 0.75 = 1.5, w = 0.3125 - 0.1875.
  CHECK(s2.opt_m[0] == 1.5f);
  CHECK(s2.weights[0] == 0.125f);
  CHECK(s2.weights[1] == -0.125f);
}

TEST_CASE("adam bookkeeping advances and descends") {
  TrainConfig cfg = small_config({1, 1}, Activation::identity, Loss::mse, OptimizerKind::adam);
  cfg.learning_rate = 0.1f;
  ModelState s = init_model(cfg.arch, 0, 0.0f, cfg.optimizer);
  s.weights = {2.0f, 0.0f};

  std::vector<Sample> batch{{{1.0f}, {0.0f}}};
  ModelState cur = s;
  float prev_w = cur.weights[0];
  for (int i = 0; i < 50; ++i) {
    cur = train_step(cur, batch, cfg);
    CHECK(cur.adam_t == static_cast<std::uint64_t>(i + 1));
    CHECK(std::isfinite(cur.weights[0]));
  }
  CHECK(cur.weights[0] < prev_w);
  CHECK(cur.opt_v[0] > 0.0f);
}

TEST_CASE("relu gates gradients of inactive units to exact zero") {
  TrainConfig cfg = small_config({1, 2, 1}, Activation::relu, Loss::mse, OptimizerKind::sgd);
  ModelState s = init_model(cfg.arch, 0, 0.0f, cfg.optimizer);
  // Hidden pre-activations at x = 1: unit 0 -> 1.5 (live), unit 1 -> -1.5 (dead).
  s.weights = {1.0f, -1.0f, 0.5f, -0.5f, 1.0f, 1.0f, 0.0f};

  std::vector<Sample> batch{{{1.0f}, {0.0f}}};
  std::vector<float> grad;
  float loss = batch_gradient(s, batch, cfg, grad);
  CHECK(loss == 2.25f);
  const float expected[7] = {3.0f, 0.0f, 3.0f, 0.0f, 4.5f, 0.0f, 3.0f};
  REQUIRE(grad.size() == 7);
  for (int i = 0; i < 7; ++i) CHECK(grad[i] == expected[i]);
}

TEST_CASE("softmax cross entropy at zero logits is symmetric") {
  TrainConfig cfg =
      small_config({2, 2}, Activation::identity, Loss::softmax_cross_entropy,
                   OptimizerKind::sgd);
  ModelState s = init_model(cfg.arch, 0, 0.0f, cfg.optimizer);

  std::vector<Sample> batch{{{1.0f, 2.0f}, {1.0f, 0.0f}}};
  std::vector<float> grad;
  float loss = batch_gradient(s, batch, cfg, grad);
  CHECK(loss == det_log(2.0f));
  CHECK(loss == doctest::Approx(std::log(2.0)).epsilon(1e-6));

  const float expected[6] = {-0.5f, -1.0f, 0.5f, 1.0f, -0.5f, 0.5f};
  REQUIRE(grad.size() == 6);
  for (int i = 0; i < 6; ++i) CHECK(grad[i] == expected[i]);
}

TEST_CASE("l2 adds the exact ridge term to loss and gradient") {
  TrainConfig cfg = small_config({1, 1}, Activation::identity, Loss::mse, OptimizerKind::sgd);
  cfg.l2 = 0.5f;
  ModelState s = init_model(cfg.arch, 0, 0.0f, cfg.optimizer);
  s.weights = {0.5f, 0.25f};

  std::vector<Sample> batch{{{1.0f}, {0.0f}}};
  std::vector<float> grad;
  float loss = batch_gradient(s, batch, cfg, grad);
  // Data term 0.5625, ridge 0.25 * (0.25 + 0.0625).
  CHECK(loss == 0.5625f + 0.25f * 0.3125f);
  CHECK(grad[0] == 1.5f + 0.25f);   // + l2 * w
  CHECK(grad[1] == 1.5f + 0.125f);  // + l2 * b
}

TEST_CASE("mean batching divides by the batch size") {
  TrainConfig cfg = small_config({1, 1}, Activation::identity, Loss::mse, OptimizerKind::sgd);
  cfg.batch_size = 2;
  ModelState s = init_model(cfg.arch, 0, 0.0f, cfg.optimizer);
  s.weights = {1.0f, 0.0f};

  std::vector<Sample> batch{{{1.0f}, {0.0f}}, {{3.0f}, {0.0f}}};
  std::vector<float> grad;
  float loss = batch_gradient(s, batch, cfg, grad);
  CHECK(loss == 0.5f * (1.0f + 9.0f));
  CHECK(grad[0] == 0.5f * (2.0f + 18.0f));  // mean of 2*d*x
  CHECK(grad[1] == 0.5f * (2.0f + 6.0f));
}

TEST_CASE("train_range equals one replay split at any boundary") {
  TrainConfig cfg = small_config({2, 4, 2}, Activation::relu, Loss::mse, OptimizerKind::adam);
  cfg.learning_rate = 0.01f;
  cfg.batch_size = 2;
  cfg.init_seed = 5;

  std::vector<Sample> pool;
  Splitmix64 rng(91);
  for (int i = 0; i < 8; ++i) {
    Sample smp;
    for (int j = 0; j < 2; ++j) smp.input.push_back(rng.next_unit_f32() * 2.0f - 1.0f);
    for (int j = 0; j < 2; ++j) smp.target.push_back(rng.next_unit_f32() * 2.0f - 1.0f);
    pool.push_back(std::move(smp));
  }

  std::vector<std::uint64_t> flat;
  for (int t = 0; t < 12; ++t)
    for (int j = 0; j < 2; ++j) flat.push_back(1 + rng.below(8));

  ModelState start = init_model(cfg.arch, cfg.init_seed, cfg.init_scale, cfg.optimizer);
  auto lookup = lookup_of(pool);
  ModelState whole = train_range(start, flat, 0, lookup, cfg);

  for (std::uint64_t split : {1u, 5u, 11u}) {
    std::span<const std::uint64_t> all(flat);
    ModelState head = train_range(start, all.subspan(0, split * 2), 0, lookup, cfg);
    ModelState tail = train_range(head, all.subspan(split * 2), split, lookup, cfg);
    CHECK(tail.canonical_bytes(cfg.optimizer) == whole.canonical_bytes(cfg.optimizer));
  }
}

TEST_CASE("train_range rejects a state at the wrong step") {
  TrainConfig cfg = small_config({1, 1}, Activation::identity, Loss::mse, OptimizerKind::sgd);
  std::vector<Sample> pool{{{1.0f}, {0.0f}}};
  std::vector<std::uint64_t> flat{1};
  ModelState s = init_model(cfg.arch, 0, 0.5f, cfg.optimizer);
  s.step_index = 3;
  CHECK_THROWS_AS(train_range(s, flat, 2, lookup_of(pool), cfg), Error);
}

TEST_CASE("non-finite loss aborts the step before any update") {
  TrainConfig cfg = small_config({1, 1}, Activation::identity, Loss::mse, OptimizerKind::sgd);
  ModelState s = init_model(cfg.arch, 0, 0.0f, cfg.optimizer);
  s.weights = {3e38f, 0.0f};
  std::vector<Sample> batch{{{3e38f}, {0.0f}}};
  try {
    train_step(s, batch, cfg);
    FAIL("expected a non-finite loss error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::non_finite_loss);
  }
}

TEST_CASE("deterministic exp and log track libm closely") {
  CHECK(det_exp(0.0f) == 1.0f);
  CHECK(det_log(1.0f) == 0.0f);
  CHECK(det_exp(100.0f) == std::numeric_limits<float>::infinity());
  CHECK(det_exp(-200.0f) == 0.0f);
  CHECK(det_log(0.0f) == -std::numeric_limits<float>::infinity());
  CHECK(std::isnan(det_log(-1.0f)));
  CHECK(std::isnan(det_exp(std::numeric_limits<float>::quiet_NaN())));
  CHECK(det_log(std::numeric_limits<float>::infinity()) ==
        std::numeric_limits<float>::infinity());

  Splitmix64 rng(23);
  for (int i = 0; i < 20000; ++i) {
    float x = rng.next_unit_f32() * 170.0f - 85.0f;
    double ref = std::exp(static_cast<double>(x));
    double got = static_cast<double>(det_exp(x));
    CHECK(std::abs(got - ref) <= 1e-6 * std::abs(ref));
  }
  for (int i = 0; i < 20000; ++i) {
    float x = det_exp(rng.next_unit_f32() * 160.0f - 80.0f);
    if (x <= 0.0f) continue;
    double ref = std::log(static_cast<double>(x));
    double got = static_cast<double>(det_log(x));
    CHECK(std::abs(got - ref) <= 1e-6 * std::max(1.0, std::abs(ref)));
  }
  // Subnormal inputs stay on the real log curve (of the rounded float value;
  // the decimal literal itself is not representable at that magnitude).
  float tiny = 1e-42f;
  CHECK(det_log(tiny) ==
        doctest::Approx(std::log(static_cast<double>(tiny))).epsilon(1e-6));
}

TEST_CASE("analytic gradients agree with finite differences") {
  Splitmix64 rng(31);
  struct Case {
    std::vector<std::uint64_t> sizes;
    Activation act;
    Loss loss;
  };
  std::vector<Case> cases{
      {{3, 1}, Activation::identity, Loss::mse},
      {{2, 5, 2}, Activation::identity, Loss::mse},
      {{2, 4, 3}, Activation::relu, Loss::mse},
      {{4, 3}, Activation::identity, Loss::softmax_cross_entropy},
      {{3, 6, 3}, Activation::relu, Loss::softmax_cross_entropy},
  };
  for (const auto& c : cases) {
    TrainConfig cfg = small_config(c.sizes, c.act, c.loss, OptimizerKind::sgd);
    cfg.l2 = (c.loss == Loss::mse) ? 0.01f : 0.0f;
    cfg.batch_size = 3;
    ModelState s = init_model(cfg.arch, rng.next(), 0.5f, cfg.optimizer);
    std::vector<Sample> batch;
    for (int b = 0; b < 3; ++b) {
      Sample smp;
      for (std::uint64_t j = 0; j < c.sizes.front(); ++j)
        smp.input.push_back(rng.next_unit_f32() * 2.0f - 1.0f);
      if (c.loss == Loss::mse) {
        for (std::uint64_t j = 0; j < c.sizes.back(); ++j)
          smp.target.push_back(rng.next_unit_f32() * 2.0f - 1.0f);
      } else {
        smp.target.assign(c.sizes.back(), 0.0f);
        smp.target[rng.below(c.sizes.back())] = 1.0f;
      }
      batch.push_back(std::move(smp));
    }
    double err = gradient_check(s, batch, cfg);
    CHECK(err < 1e-3);
  }
}

TEST_CASE("configuration byte strings round-trip") {
  TrainConfig cfg = small_config({4, 7, 2}, Activation::relu, Loss::softmax_cross_entropy,
                                 OptimizerKind::adam);
  cfg.learning_rate = 0.002f;
  cfg.l2 = 0.004f;
  cfg.batch_size = 5;
  cfg.init_seed = 77;
  cfg.shuffle_seed = 88;
  cfg.init_scale = 0.25f;

  TrainConfig back = TrainConfig::from_category_bytes(as_view(cfg.setup_bytes()),
                                                      as_view(cfg.trainer_bytes()));
  CHECK(back.setup_bytes() == cfg.setup_bytes());
  CHECK(back.trainer_bytes() == cfg.trainer_bytes());
  CHECK(back.arch.layer_sizes == cfg.arch.layer_sizes);
  CHECK(back.arch.param_count() == cfg.arch.param_count());
  CHECK(back.optimizer == cfg.optimizer);
  CHECK(back.batch_size == 5);
  CHECK(back.shuffle_seed == 88);
}

TEST_CASE("architecture validation rejects malformed shapes") {
  ArchSpec arch;
  arch.layer_sizes = {3};
  CHECK_THROWS(arch.validate());
  arch.layer_sizes = {3, 0, 2};
  CHECK_THROWS(arch.validate());
  arch.layer_sizes = {};
  CHECK_THROWS(arch.validate());

  TrainConfig cfg = small_config({2, 2}, Activation::relu, Loss::mse, OptimizerKind::sgd);
  cfg.batch_size = 0;
  CHECK_THROWS(cfg.validate());
  cfg.batch_size = 1;
  cfg.learning_rate = -1.0f;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("name round-trips for the enums") {
  for (auto a : {Activation::identity, Activation::relu})
    CHECK(activation_from_name(activation_name(a)) == a);
  for (auto l : {Loss::mse, Loss::softmax_cross_entropy})
    CHECK(loss_from_name(loss_name(l)) == l);
  for (auto o : {OptimizerKind::sgd, OptimizerKind::momentum, OptimizerKind::adam})
    CHECK(optimizer_from_name(optimizer_name(o)) == o);
  CHECK_THROWS(activation_from_name("tanh"));
  CHECK_THROWS(optimizer_from_name(""));
}
