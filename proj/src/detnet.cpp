#include "detnet.hpp"

#include <cmath>
#include <cstring>

#include "detmath.hpp"
#include "error.hpp"
#include "prng.hpp"

namespace tcat {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
  }
  return "?";
}

const char* loss_name(Loss l) {
  switch (l) {
    case Loss::mse: return "mse";
    case Loss::softmax_cross_entropy: return "softmax_cross_entropy";
  }
  return "?";
}

const char* optimizer_name(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::momentum: return "momentum";
    case OptimizerKind::adam: return "adam";
  }
  return "?";
}

Activation activation_from_name(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  raise(Errc::invalid_argument, "unknown activation: " + s);
}

Loss loss_from_name(const std::string& s) {
  if (s == "mse") return Loss::mse;
  if (s == "softmax_cross_entropy") return Loss::softmax_cross_entropy;
  raise(Errc::invalid_argument, "unknown loss: " + s);
}

OptimizerKind optimizer_from_name(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "momentum") return OptimizerKind::momentum;
  if (s == "adam") return OptimizerKind::adam;
  raise(Errc::invalid_argument, "unknown optimizer: " + s);
}

void ArchSpec::validate() const {
  if (layer_sizes.size() < 2) raise(Errc::invalid_argument, "architecture needs at least 2 layers");
  for (std::uint64_t s : layer_sizes)
    if (s < 1) raise(Errc::invalid_argument, "layer sizes must be >= 1");
  if (activation != Activation::identity && activation != Activation::relu)
    raise(Errc::invalid_argument, "unknown activation");
  if (loss != Loss::mse && loss != Loss::softmax_cross_entropy)
    raise(Errc::invalid_argument, "unknown loss");
}

std::uint64_t ArchSpec::param_count() const {
  std::uint64_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
    n += layer_sizes[l] * layer_sizes[l + 1] + layer_sizes[l + 1];
  return n;
}

Bytes ArchSpec::canonical_bytes() const {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(activation));
  w.u8(static_cast<std::uint8_t>(loss));
  w.u64(layer_sizes.size());
  for (std::uint64_t s : layer_sizes) w.u64(s);
  return w.take();
}

ArchSpec ArchSpec::parse(ByteReader& r) {
  ArchSpec a;
  a.activation = static_cast<Activation>(r.u8());
  a.loss = static_cast<Loss>(r.u8());
  std::uint64_t count = r.u64();
  if (count < 2 || count > 1u << 20) raise(Errc::format, "bad layer count");
  a.layer_sizes.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) a.layer_sizes.push_back(r.u64());
  a.validate();
  return a;
}

ArchSpec ArchSpec::from_bytes(BytesView data) {
  ByteReader r(data);
  ArchSpec a = parse(r);
  r.expect_done();
  return a;
}

void TrainConfig::validate() const {
  arch.validate();
  if (batch_size < 1) raise(Errc::invalid_argument, "batch_size must be >= 1");
  if (!std::isfinite(learning_rate) || learning_rate < 0.0f)
    raise(Errc::invalid_argument, "learning_rate must be finite and >= 0");
  if (!(momentum_coef >= 0.0f && momentum_coef < 1.0f))
    raise(Errc::invalid_argument, "momentum_coef must be in [0, 1)");
  if (!(adam_beta1 >= 0.0f && adam_beta1 < 1.0f) || !(adam_beta2 >= 0.0f && adam_beta2 < 1.0f))
    raise(Errc::invalid_argument, "adam betas must be in [0, 1)");
  if (!(adam_eps > 0.0f)) raise(Errc::invalid_argument, "adam_eps must be > 0");
  if (!(l2 >= 0.0f) || !std::isfinite(l2)) raise(Errc::invalid_argument, "l2 must be finite and >= 0");
  if (!(init_scale >= 0.0f) || !std::isfinite(init_scale))
    raise(Errc::invalid_argument, "init_scale must be finite and >= 0");
}

Bytes TrainConfig::setup_bytes() const {
  ByteWriter w;
  w.raw(arch.canonical_bytes());
  w.u64(init_seed);
  w.f32(init_scale);
  return w.take();
}

Bytes TrainConfig::trainer_bytes() const {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(optimizer));
  w.f32(learning_rate);
  w.f32(momentum_coef);
  w.f32(adam_beta1);
  w.f32(adam_beta2);
  w.f32(adam_eps);
  w.f32(l2);
  w.u64(batch_size);
  w.u64(shuffle_seed);
  return w.take();
}

TrainConfig TrainConfig::from_category_bytes(BytesView setup, BytesView trainer) {
  TrainConfig c;
  {
    ByteReader r(setup);
    c.arch = ArchSpec::parse(r);
    c.init_seed = r.u64();
    c.init_scale = r.f32();
    r.expect_done();
  }
  {
    ByteReader r(trainer);
    std::uint8_t opt = r.u8();
    if (opt > 2) raise(Errc::format, "unknown optimizer tag");
    c.optimizer = static_cast<OptimizerKind>(opt);
    c.learning_rate = r.f32();
    c.momentum_coef = r.f32();
    c.adam_beta1 = r.f32();
    c.adam_beta2 = r.f32();
    c.adam_eps = r.f32();
    c.l2 = r.f32();
    c.batch_size = r.u64();
    c.shuffle_seed = r.u64();
    r.expect_done();
  }
  c.validate();
  return c;
}

Bytes ModelState::canonical_bytes(OptimizerKind kind) const {
  ByteWriter w;
  w.u64(weights.size());
  for (float f : weights) w.f32(f);
  if (kind == OptimizerKind::momentum) {
    for (float f : opt_m) w.f32(f);
  } else if (kind == OptimizerKind::adam) {
    for (float f : opt_m) w.f32(f);
    for (float f : opt_v) w.f32(f);
    w.u64(adam_t);
  }
  w.u64(step_index);
  return w.take();
}

ModelState ModelState::from_bytes(BytesView data, OptimizerKind kind) {
  ByteReader r(data);
  ModelState s;
  std::uint64_t n = r.u64();
  if (n > (std::uint64_t{1} << 32)) raise(Errc::format, "parameter count out of range");
  s.weights.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) s.weights[i] = r.f32();
  if (kind == OptimizerKind::momentum) {
    s.opt_m.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) s.opt_m[i] = r.f32();
  } else if (kind == OptimizerKind::adam) {
    s.opt_m.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) s.opt_m[i] = r.f32();
    s.opt_v.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) s.opt_v[i] = r.f32();
    s.adam_t = r.u64();
  }
  s.step_index = r.u64();
  r.expect_done();
  return s;
}

namespace {

struct LayerView {
  std::size_t w_off, b_off, in, out;
};

std::vector<LayerView> layer_views(const ArchSpec& a) {
  std::vector<LayerView> v;
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < a.layer_sizes.size(); ++l) {
    LayerView lv;
    lv.in = static_cast<std::size_t>(a.layer_sizes[l]);
    lv.out = static_cast<std::size_t>(a.layer_sizes[l + 1]);
    lv.w_off = off;
    lv.b_off = off + lv.in * lv.out;
    off = lv.b_off + lv.out;
    v.push_back(lv);
  }
  return v;
}

void check_sample_dims(const ArchSpec& arch, const Sample& s) {
  if (s.input.size() != arch.input_dim() || s.target.size() != arch.output_dim())
    raise(Errc::invalid_argument, "sample dimensions do not match architecture");
}

void check_state_shape(const ModelState& s, const TrainConfig& cfg) {
  std::uint64_t n = cfg.arch.param_count();
  if (s.weights.size() != n) raise(Errc::invalid_argument, "weight count does not match architecture");
  std::size_t want_m = 0, want_v = 0;
  if (cfg.optimizer == OptimizerKind::momentum) want_m = n;
  if (cfg.optimizer == OptimizerKind::adam) want_m = want_v = n;
  if (s.opt_m.size() != want_m || s.opt_v.size() != want_v)
    raise(Errc::invalid_argument, "optimizer state does not match optimizer kind");
}

// Forward pass. acts[0] is the input, acts[l+1] the activation of layer l;
// zs[l] the preactivation. Per-unit accumulation starts at the bias and adds
// products in ascending input order.
void forward_f32(const std::vector<LayerView>& lvs, Activation act, std::span<const float> w,
                 const std::vector<float>& input, std::vector<std::vector<float>>& acts,
                 std::vector<std::vector<float>>& zs) {
  acts.resize(lvs.size() + 1);
  zs.resize(lvs.size());
  acts[0] = input;
  for (std::size_t l = 0; l < lvs.size(); ++l) {
    const LayerView& lv = lvs[l];
    zs[l].resize(lv.out);
    const std::vector<float>& a = acts[l];
    for (std::size_t o = 0; o < lv.out; ++o) {
      float acc = w[lv.b_off + o];
      const float* row = &w[lv.w_off + o * lv.in];
      for (std::size_t i = 0; i < lv.in; ++i) acc = acc + row[i] * a[i];
      zs[l][o] = acc;
    }
    acts[l + 1].resize(lv.out);
    if (l + 1 < lvs.size() && act == Activation::relu) {
      for (std::size_t o = 0; o < lv.out; ++o) acts[l + 1][o] = zs[l][o] > 0.0f ? zs[l][o] : 0.0f;
    } else {
      acts[l + 1] = zs[l];
    }
  }
}

// Loss of one sample and its gradient with respect to the (linear) output.
float loss_and_output_delta(Loss loss, const std::vector<float>& out,
                            const std::vector<float>& y, std::vector<float>& dz,
                            std::vector<float>& scratch) {
  dz.resize(out.size());
  if (loss == Loss::mse) {
    float s = 0.0f;
    for (std::size_t i = 0; i < out.size(); ++i) {
      float d = out[i] - y[i];
      s = s + d * d;
      dz[i] = 2.0f * d;
    }
    return s;
  }
  // Softmax cross entropy with max subtraction; exp/log via the
  // deterministic kernels.
  scratch.resize(out.size());
  float mx = out[0];
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i] > mx) mx = out[i];
  float se = 0.0f;
  for (std::size_t i = 0; i < out.size(); ++i) {
    scratch[i] = det_exp(out[i] - mx);
    se = se + scratch[i];
  }
  float lse = det_log(se) + mx;
  float l = 0.0f;
  for (std::size_t i = 0; i < out.size(); ++i) {
    dz[i] = scratch[i] / se - y[i];
    l = l + y[i] * (lse - out[i]);
  }
  return l;
}

void backward_accumulate(const std::vector<LayerView>& lvs, Activation act,
                         std::span<const float> w, const std::vector<std::vector<float>>& acts,
                         const std::vector<std::vector<float>>& zs, std::vector<float>& delta,
                         std::vector<float>& grad) {
  std::vector<float> dprev;
  for (std::size_t li = lvs.size(); li-- > 0;) {
    const LayerView& lv = lvs[li];
    const std::vector<float>& a = acts[li];
    for (std::size_t o = 0; o < lv.out; ++o) {
      float dl = delta[o];
      float* grow = &grad[lv.w_off + o * lv.in];
      for (std::size_t i = 0; i < lv.in; ++i) grow[i] = grow[i] + dl * a[i];
      grad[lv.b_off + o] = grad[lv.b_off + o] + dl;
    }
    if (li > 0) {
      dprev.assign(lv.in, 0.0f);
      for (std::size_t i = 0; i < lv.in; ++i) {
        float acc = 0.0f;
        for (std::size_t o = 0; o < lv.out; ++o) acc = acc + w[lv.w_off + o * lv.in + i] * delta[o];
        if (act == Activation::relu && !(zs[li - 1][i] > 0.0f)) acc = 0.0f;
        dprev[i] = acc;
      }
      std::swap(delta, dprev);
    }
  }
}

void apply_update(ModelState& s, const std::vector<float>& g, const TrainConfig& cfg) {
  const std::size_t n = s.weights.size();
  switch (cfg.optimizer) {
    case OptimizerKind::sgd:
      for (std::size_t k = 0; k < n; ++k) s.weights[k] = s.weights[k] - cfg.learning_rate * g[k];
      break;
    case OptimizerKind::momentum:
      for (std::size_t k = 0; k < n; ++k) {
        s.opt_m[k] = cfg.momentum_coef * s.opt_m[k] + g[k];
        s.weights[k] = s.weights[k] - cfg.learning_rate * s.opt_m[k];
      }
      break;
    case OptimizerKind::adam: {
      s.adam_t += 1;
      // beta^t as an iterated binary32 product so the value depends only on
      // t, not on where a replay resumed.
      float b1t = 1.0f, b2t = 1.0f;
      for (std::uint64_t i = 0; i < s.adam_t; ++i) {
        b1t = b1t * cfg.adam_beta1;
        b2t = b2t * cfg.adam_beta2;
      }
      const float om1 = 1.0f - cfg.adam_beta1;
      const float om2 = 1.0f - cfg.adam_beta2;
      const float c1 = 1.0f - b1t;
      const float c2 = 1.0f - b2t;
      for (std::size_t k = 0; k < n; ++k) {
        s.opt_m[k] = cfg.adam_beta1 * s.opt_m[k] + om1 * g[k];
        s.opt_v[k] = cfg.adam_beta2 * s.opt_v[k] + om2 * (g[k] * g[k]);
        float mhat = s.opt_m[k] / c1;
        float vhat = s.opt_v[k] / c2;
        s.weights[k] = s.weights[k] - cfg.learning_rate * (mhat / (std::sqrt(vhat) + cfg.adam_eps));
      }
      break;
    }
  }
}

void train_step_inplace(ModelState& s, std::span<const Sample> batch, const TrainConfig& cfg,
                        std::vector<float>& grad) {
  float loss = batch_gradient(s, batch, cfg, grad);
  if (!std::isfinite(loss))
    raise(Errc::non_finite_loss, "non-finite loss at step " + std::to_string(s.step_index));
  apply_update(s, grad, cfg);
  s.step_index += 1;
}

}  // namespace

ModelState init_model(const ArchSpec& arch, std::uint64_t init_seed, float init_scale,
                      OptimizerKind kind) {
  arch.validate();
  if (!(init_scale >= 0.0f) || !std::isfinite(init_scale))
    raise(Errc::invalid_argument, "init_scale must be finite and >= 0");
  std::uint64_t n = arch.param_count();
  ModelState s;
  s.weights.resize(n);
  Splitmix64 rng(init_seed);
  const float two_scale = 2.0f * init_scale;
  for (std::uint64_t k = 0; k < n; ++k) {
    float u = rng.next_unit_f32();
    s.weights[k] = u * two_scale - init_scale;
  }
  if (kind == OptimizerKind::momentum) {
    s.opt_m.assign(n, 0.0f);
  } else if (kind == OptimizerKind::adam) {
    s.opt_m.assign(n, 0.0f);
    s.opt_v.assign(n, 0.0f);
  }
  return s;
}

float batch_gradient(const ModelState& state, std::span<const Sample> batch,
                     const TrainConfig& cfg, std::vector<float>& grad_out) {
  cfg.validate();
  check_state_shape(state, cfg);
  if (batch.empty()) raise(Errc::invalid_argument, "empty batch");
  for (const Sample& s : batch) check_sample_dims(cfg.arch, s);

  const std::vector<LayerView> lvs = layer_views(cfg.arch);
  const std::size_t n = state.weights.size();
  grad_out.assign(n, 0.0f);

  std::vector<std::vector<float>> acts, zs;
  std::vector<float> dz, scratch;
  float loss_sum = 0.0f;
  for (const Sample& s : batch) {
    forward_f32(lvs, cfg.arch.activation, state.weights, s.input, acts, zs);
    loss_sum = loss_sum + loss_and_output_delta(cfg.arch.loss, acts.back(), s.target, dz, scratch);
    backward_accumulate(lvs, cfg.arch.activation, state.weights, acts, zs, dz, grad_out);
  }

  const float inv_b = 1.0f / static_cast<float>(batch.size());
  for (std::size_t k = 0; k < n; ++k) grad_out[k] = grad_out[k] * inv_b;
  float loss = loss_sum * inv_b;
  if (cfg.l2 != 0.0f) {
    float pen = 0.0f;
    for (std::size_t k = 0; k < n; ++k) {
      grad_out[k] = grad_out[k] + cfg.l2 * state.weights[k];
      pen = pen + state.weights[k] * state.weights[k];
    }
    loss = loss + 0.5f * cfg.l2 * pen;
  }
  return loss;
}

ModelState train_step(const ModelState& state, std::span<const Sample> batch,
                      const TrainConfig& cfg) {
  ModelState s = state;
  std::vector<float> grad;
  train_step_inplace(s, batch, cfg, grad);
  return s;
}

ModelState train_range(ModelState state, std::span<const std::uint64_t> flat_indices,
                       std::uint64_t start_step, const SampleLookup& sample,
                       const TrainConfig& cfg) {
  cfg.validate();
  if (state.step_index != start_step)
    raise(Errc::invalid_argument, "state step index does not match range start");
  const std::uint64_t b = cfg.batch_size;
  if (flat_indices.size() % b != 0)
    raise(Errc::invalid_argument, "index list is not a whole number of rows");
  const std::uint64_t rows = flat_indices.size() / b;

  std::vector<Sample> batch(static_cast<std::size_t>(b));
  std::vector<float> grad;
  for (std::uint64_t t = 0; t < rows; ++t) {
    for (std::uint64_t c = 0; c < b; ++c) batch[c] = sample(flat_indices[t * b + c]);
    train_step_inplace(state, batch, cfg, grad);
  }
  return state;
}

namespace {

double loss_f64_one(const ArchSpec& arch, const std::vector<LayerView>& lvs,
                    std::span<const double> w, const Sample& s) {
  std::vector<double> a(s.input.begin(), s.input.end());
  std::vector<double> z;
  for (std::size_t l = 0; l < lvs.size(); ++l) {
    const LayerView& lv = lvs[l];
    z.assign(lv.out, 0.0);
    for (std::size_t o = 0; o < lv.out; ++o) {
      double acc = w[lv.b_off + o];
      for (std::size_t i = 0; i < lv.in; ++i) acc += w[lv.w_off + o * lv.in + i] * a[i];
      z[o] = acc;
    }
    if (l + 1 < lvs.size() && arch.activation == Activation::relu)
      for (double& v : z)
        if (!(v > 0.0)) v = 0.0;
    a = z;
  }
  if (arch.loss == Loss::mse) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      double d = a[i] - s.target[i];
      sum += d * d;
    }
    return sum;
  }
  double mx = a[0];
  for (double v : a) mx = std::max(mx, v);
  double se = 0.0;
  for (double v : a) se += std::exp(v - mx);
  double lse = std::log(se) + mx;
  double l = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) l += s.target[i] * (lse - a[i]);
  return l;
}

}  // namespace

double loss_f64(const TrainConfig& cfg, std::span<const double> weights,
                std::span<const Sample> batch) {
  const std::vector<LayerView> lvs = layer_views(cfg.arch);
  double sum = 0.0;
  for (const Sample& s : batch) sum += loss_f64_one(cfg.arch, lvs, weights, s);
  double loss = sum / static_cast<double>(batch.size());
  if (cfg.l2 != 0.0f) {
    double pen = 0.0;
    for (double w : weights) pen += w * w;
    loss += 0.5 * static_cast<double>(cfg.l2) * pen;
  }
  return loss;
}

double gradient_check(const ModelState& state, std::span<const Sample> batch,
                      const TrainConfig& cfg, double eps) {
  std::vector<float> g;
  batch_gradient(state, batch, cfg, g);
  std::vector<double> wd(state.weights.begin(), state.weights.end());
  double worst = 0.0;
  for (std::size_t k = 0; k < wd.size(); ++k) {
    const double save = wd[k];
    wd[k] = save + eps;
    double lp = loss_f64(cfg, wd, batch);
    wd[k] = save - eps;
    double lm = loss_f64(cfg, wd, batch);
    wd[k] = save;
    double fd = (lp - lm) / (2.0 * eps);
    double ga = static_cast<double>(g[k]);
    double denom = std::max(std::max(std::fabs(ga), std::fabs(fd)), 1e-6);
    worst = std::max(worst, std::fabs(ga - fd) / denom);
  }
  return worst;
}

}  // namespace tcat
