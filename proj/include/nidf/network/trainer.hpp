#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nidf/core/parallel.hpp"
#include "nidf/network/adam.hpp"
#include "nidf/network/checkpoint.hpp"
#include "nidf/network/loss.hpp"

namespace nidf::net {

enum class Stage { pretrain_denoise, pretrain_deblur, joint };

inline std::string to_string(Stage s) {
  switch (s) {
    case Stage::pretrain_denoise: return "pretrain-denoise";
    case Stage::pretrain_deblur: return "pretrain-deblur";
    case Stage::joint: return "joint";
  }
  return "?";
}

inline Stage parse_stage(const std::string& s) {
  if (s == "pretrain-denoise") return Stage::pretrain_denoise;
  if (s == "pretrain-deblur") return Stage::pretrain_deblur;
  if (s == "joint") return Stage::joint;
  throw InvalidInput("unknown stage '" + s + "' (pretrain-denoise|pretrain-deblur|joint)");
}

inline constexpr double kPretrainLearningRate = 1e-4;
inline constexpr double kJointLearningRate = 1e-5;

struct TrainConfig {
  Stage stage = Stage::pretrain_denoise;
  double learning_rate = 0.0;  // <= 0: 1e-4 for pretraining, 1e-5 for joint
  int batch_size = 16;
  int epochs = 200;
  std::uint64_t seed = 0;
  int precision = 32;
  int threads = 1;

  [[nodiscard]] double effective_learning_rate() const {
    if (learning_rate > 0.0) return learning_rate;
    return stage == Stage::joint ? kJointLearningRate : kPretrainLearningRate;
  }

  void validate() const {
    if (!(effective_learning_rate() > 0.0)) throw InvalidInput("train: learning rate must be > 0");
    if (batch_size < 1) throw InvalidInput("train: batch size must be >= 1");
    if (epochs < 0) throw InvalidInput("train: epochs must be >= 0");
    if (precision != 32 && precision != 64) throw InvalidInput("train: precision must be 32 or 64");
  }
};

// One training example: noisy input N, blurry ground truth B, sharp ground truth I.
struct TrainingTriple {
  Image noisy;
  Image blurry;
  Image sharp;
};

template <typename T>
struct CascadeGradients {
  double loss = 0.0;
  double denoise_term = 0.0;  // ||B - B1||^2 (mean)
  double deblur_term = 0.0;   // ||I - I1||^2 (mean), unweighted
  ParamGrads<T> net1;
  ParamGrads<T> net2;
};

// Loss and exact gradients for one example under the stage's objective:
//   pretrain-denoise  L = ||B - Net1(N)||^2
//   pretrain-deblur   L = ||I - Net2(B)||^2
//   joint             L = ||B - B1||^2 + 0.5 ||I - I1||^2,  B1 = Net1(N), I1 = Net2(B1)
// In joint mode the deblurring term reaches Net1 through B1.
template <typename T>
CascadeGradients<T> cascade_gradients(Stage stage, const NetParams<T>& net1, const NetParams<T>& net2,
                                      const NetArch& arch, const Tensor<T>& noisy, const Tensor<T>& blurry,
                                      const Tensor<T>& sharp) {
  CascadeGradients<T> r{0.0, 0.0, 0.0, ParamGrads<T>(net1), ParamGrads<T>(net2)};
  switch (stage) {
    case Stage::pretrain_denoise: {
      auto f = forward(net1, arch, noisy);
      auto l = mse_with_grad(f.output, blurry);
      r.loss = r.denoise_term = l.value;
      r.net1 = backward(net1, f.tape, l.grad).grads;
      break;
    }
    case Stage::pretrain_deblur: {
      auto f = forward(net2, arch, blurry);
      auto l = mse_with_grad(f.output, sharp);
      r.loss = r.deblur_term = l.value;
      r.net2 = backward(net2, f.tape, l.grad).grads;
      break;
    }
    case Stage::joint: {
      auto f1 = forward(net1, arch, noisy);
      auto f2 = forward(net2, arch, f1.output);
      auto l1 = mse_with_grad(f1.output, blurry);
      auto l2 = mse_with_grad(f2.output, sharp, kJointDeblurWeight);
      r.denoise_term = l1.value;
      r.deblur_term = l2.value / kJointDeblurWeight;
      r.loss = l1.value + l2.value;
      auto b2 = backward(net2, f2.tape, l2.grad);
      r.net2 = std::move(b2.grads);
      Tensor<T> d_b1 = std::move(l1.grad);
      for (std::size_t i = 0; i < d_b1.size(); ++i) d_b1.data[i] += b2.d_input.data[i];
      r.net1 = backward(net1, f1.tape, d_b1).grads;
      break;
    }
  }
  return r;
}

struct TrainHooks {
  std::function<void(int epoch, double mean_loss)> on_epoch;
};

namespace detail {

template <typename T>
struct TensorTriple {
  Tensor<T> noisy, blurry, sharp;
};

inline void check_init(const Checkpoint& ck, const NetArch& arch, const char* which) {
  if (!(ck.arch == arch)) throw InvalidInput(std::string("train: ") + which + " checkpoint arch differs from requested arch");
}

}  // namespace detail

// Trains the subnet(s) selected by the stage. Pretraining starts from
// `init` when given, else from a seeded He initialization. The joint stage
// takes Net1 from `init` and Net2 from `init2`; both are required.
// Deterministic given the config: per-epoch shuffles derive from the seed and
// per-batch gradients are reduced in sample order.
template <typename T>
Checkpoint train(const std::vector<TrainingTriple>& data, const NetArch& arch, const TrainConfig& cfg,
                 const Checkpoint* init = nullptr, const Checkpoint* init2 = nullptr, const TrainHooks& hooks = {}) {
  cfg.validate();
  arch.validate();
  if (data.empty()) throw InvalidInput("train: no training samples");

  Checkpoint ck;
  if (cfg.stage == Stage::joint) {
    if (!init || !init2) throw InvalidInput("train: joint stage needs both pretrained checkpoints (--init and --init2)");
    detail::check_init(*init, arch, "init");
    detail::check_init(*init2, arch, "init2");
    ck.arch = arch;
    ck.net1 = init->net1;
    ck.net2 = init2->net2;
  } else if (init) {
    detail::check_init(*init, arch, "init");
    ck = *init;
  } else {
    ck = initial_checkpoint(arch, cfg.seed);
  }
  ck.stage = to_string(cfg.stage);
  ck.epoch = 0;
  ck.seed = cfg.seed;
  ck.learning_rate = cfg.effective_learning_rate();
  ck.batch_size = cfg.batch_size;
  ck.precision = cfg.precision;
  ck.losses.clear();

  std::vector<detail::TensorTriple<T>> tensors;
  tensors.reserve(data.size());
  for (const auto& d : data) {
    arch.check_input(d.noisy.channels, d.noisy.height, d.noisy.width);
    if (!d.noisy.same_shape(d.blurry) || !d.noisy.same_shape(d.sharp)) throw InvalidInput("train: sample shape mismatch");
    tensors.push_back({to_tensor<T>(d.noisy), to_tensor<T>(d.blurry), to_tensor<T>(d.sharp)});
  }

  NetParams<T> net1 = ck.params1<T>(), net2 = ck.params2<T>();
  AdamState adam1, adam2;
  const bool train1 = cfg.stage != Stage::pretrain_deblur;
  const bool train2 = cfg.stage != Stage::pretrain_denoise;
  const double lr = cfg.effective_learning_rate();

  std::vector<std::size_t> order(tensors.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.seed, 0x5eed0000ULL + static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<std::optional<CascadeGradients<T>>> per_sample(end - start);
      parallel_for(end - start, cfg.threads, [&](std::size_t j) {
        const auto& t = tensors[order[start + j]];
        per_sample[j] = cascade_gradients(cfg.stage, net1, net2, arch, t.noisy, t.blurry, t.sharp);
      });
      ParamGrads<T> g1(net1), g2(net2);
      for (const auto& s : per_sample) {
        epoch_loss += s->loss;
        g1.add(s->net1);
        g2.add(s->net2);
      }
      const T inv = static_cast<T>(1.0 / static_cast<double>(end - start));
      g1.scale(inv);
      g2.scale(inv);
      if (train1) adam_step(net1, g1, adam1, lr);
      if (train2) adam_step(net2, g2, adam2, lr);
    }
    epoch_loss /= static_cast<double>(tensors.size());
    ck.losses.push_back(epoch_loss);
    ck.epoch = epoch + 1;
    if (hooks.on_epoch) hooks.on_epoch(epoch + 1, epoch_loss);
  }
  ck.store(net1, net2);
  return ck;
}

inline Checkpoint train(const std::vector<TrainingTriple>& data, const NetArch& arch, const TrainConfig& cfg,
                        const Checkpoint* init = nullptr, const Checkpoint* init2 = nullptr,
                        const TrainHooks& hooks = {}) {
  return cfg.precision == 64 ? train<double>(data, arch, cfg, init, init2, hooks)
                             : train<float>(data, arch, cfg, init, init2, hooks);
}

// The cascade NIDF(N) = (Net1(N), Net2(Net1(N))), evaluated in 64-bit.
struct Inference {
  Image denoised;
  Image sharp;
};

inline Inference infer(const Checkpoint& ck, const Image& noisy) {
  ck.arch.check_input(noisy.channels, noisy.height, noisy.width);
  const auto p1 = ck.params1<double>();
  const auto p2 = ck.params2<double>();
  Inference r;
  r.denoised = run(p1, ck.arch, noisy);
  r.sharp = run(p2, ck.arch, r.denoised);
  return r;
}

// Net1 from `denoiser`, Net2 from `deblurrer`: the separately trained cascade.
inline Checkpoint compose(const Checkpoint& denoiser, const Checkpoint& deblurrer) {
  if (!(denoiser.arch == deblurrer.arch)) throw InvalidInput("compose: arch mismatch");
  Checkpoint ck = denoiser;
  ck.stage = "composed";
  ck.net2 = deblurrer.net2;
  return ck;
}

}  // namespace nidf::net
