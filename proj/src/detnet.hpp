#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bytes.hpp"

namespace tcat {

enum class Activation : std::uint8_t { identity = 0, relu = 1 };
enum class Loss : std::uint8_t { mse = 0, softmax_cross_entropy = 1 };
enum class OptimizerKind : std::uint8_t { sgd = 0, momentum = 1, adam = 2 };

const char* activation_name(Activation a);
const char* loss_name(Loss l);
const char* optimizer_name(OptimizerKind k);
Activation activation_from_name(const std::string& s);
Loss loss_from_name(const std::string& s);
OptimizerKind optimizer_from_name(const std::string& s);

// Fully connected feed-forward network. Hidden layers use `activation`;
// the output layer is always linear (softmax, when used, lives in the loss).
// Parameter order: layers in forward order; within a layer the weight matrix
// row-major (row = output unit), then the biases.
struct ArchSpec {
  std::vector<std::uint64_t> layer_sizes;
  Activation activation = Activation::relu;
  Loss loss = Loss::mse;

  void validate() const;
  std::uint64_t input_dim() const { return layer_sizes.front(); }
  std::uint64_t output_dim() const { return layer_sizes.back(); }
  std::uint64_t param_count() const;
  Bytes canonical_bytes() const;
  static ArchSpec from_bytes(BytesView data);
  static ArchSpec parse(ByteReader& r);
};

struct TrainConfig {
  ArchSpec arch;
  OptimizerKind optimizer = OptimizerKind::sgd;
  float learning_rate = 0.01f;
  float momentum_coef = 0.9f;
  float adam_beta1 = 0.9f;
  float adam_beta2 = 0.999f;
  float adam_eps = 1e-8f;
  float l2 = 0.0f;
  float init_scale = 0.5f;
  std::uint64_t batch_size = 1;
  std::uint64_t init_seed = 0;
  std::uint64_t shuffle_seed = 0;

  void validate() const;
  // Architecture plus initialization commitment (category 2).
  Bytes setup_bytes() const;
  // Optimizer and hyperparameter commitment (category 3).
  Bytes trainer_bytes() const;
  static TrainConfig from_category_bytes(BytesView setup, BytesView trainer);
};

struct Sample {
  std::vector<float> input;
  std::vector<float> target;
};

// Weights plus optimizer state plus step counter. The canonical encoding is
// the byte string that gets hashed and compared, so two states are equal
// exactly when their canonical bytes are equal (this is why step_index is
// inside: a prover cannot claim a different step count for the same bytes).
struct ModelState {
  std::vector<float> weights;
  std::vector<float> opt_m;  // momentum velocity, or first Adam moment
  std::vector<float> opt_v;  // second Adam moment
  std::uint64_t adam_t = 0;
  std::uint64_t step_index = 0;

  Bytes canonical_bytes(OptimizerKind kind) const;
  static ModelState from_bytes(BytesView data, OptimizerKind kind);
};

using SampleLookup = std::function<const Sample&(std::uint64_t index)>;

ModelState init_model(const ArchSpec& arch, std::uint64_t init_seed, float init_scale,
                      OptimizerKind kind);

// Mean-batch gradient in the binary32 training number model. Returns the
// batch loss (data term plus 0.5*l2*|w|^2 when l2 != 0).
float batch_gradient(const ModelState& state, std::span<const Sample> batch,
                     const TrainConfig& cfg, std::vector<float>& grad_out);

// One optimizer step; returns the successor state, input untouched.
// Throws Errc::non_finite_loss before applying an update whose loss is NaN
// or infinite.
ModelState train_step(const ModelState& state, std::span<const Sample> batch,
                      const TrainConfig& cfg);

// Applies scheduled rows [start_step, start_step + rows) in order.
// flat_indices holds rows*batch_size dataset indices, row-major; `sample`
// resolves a 1-based dataset index to its decoded sample.
ModelState train_range(ModelState state, std::span<const std::uint64_t> flat_indices,
                       std::uint64_t start_step, const SampleLookup& sample,
                       const TrainConfig& cfg);

// Reference loss in binary64 (platform libm allowed: diagnostic only, never
// on the replay path). Weights are taken from `weights`, not the model.
double loss_f64(const TrainConfig& cfg, std::span<const double> weights,
                std::span<const Sample> batch);

// Max relative error between the analytic binary32 batch gradient and a
// binary64 central finite difference. Diagnostic. The probe step must stay
// small: a wide step can straddle a relu kink and measure the wrong slope.
double gradient_check(const ModelState& state, std::span<const Sample> batch,
                      const TrainConfig& cfg, double eps = 1e-5);

}  // namespace tcat
