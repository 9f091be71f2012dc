#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "nidf/core/rng.hpp"
#include "nidf/network/layers.hpp"

namespace nidf::net {

struct NetArch {
  int levels = 2;
  int base_channels = 8;
  int image_channels = 1;
  bool residual = true;

  void validate() const {
    if (levels < 1) throw InvalidInput("arch: levels must be >= 1");
    if (base_channels < 1) throw InvalidInput("arch: base channels must be >= 1");
    if (image_channels != 1 && image_channels != 3) throw InvalidInput("arch: image channels must be 1 or 3");
  }

  void check_input(int channels, int height, int width) const {
    const int m = 1 << levels;
    if (channels != image_channels) throw InvalidInput("network: channel count does not match arch");
    if (height % m != 0 || width % m != 0)
      throw InvalidInput("network: spatial size must be divisible by 2^levels = " + std::to_string(m));
  }

  bool operator==(const NetArch&) const = default;
};

// Layer declaration order (also the checkpoint tensor order), with
// c(k) = base_channels * 2^k and L = levels:
//   for k in 0..L-1:  enc[k].a, enc[k].b, down[k] (stride 2)
//   mid.a, mid.b
//   for k in L-1..0:  up[k] (after nearest x2), dec[k].a (on concat with enc[k]), dec[k].b
//   final (linear, c(0) -> image channels)
// Each layer stores weights [out][in][3][3] followed by biases.
template <typename T>
struct NetParams {
  std::vector<Conv3x3<T>> layers;
  std::uint64_t version = 0;  // bumped on every update; tapes from older versions are stale

  [[nodiscard]] std::size_t count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
  }

  [[nodiscard]] std::vector<T> flatten() const {
    std::vector<T> flat;
    flat.reserve(count());
    for (const auto& l : layers) {
      flat.insert(flat.end(), l.weight.begin(), l.weight.end());
      flat.insert(flat.end(), l.bias.begin(), l.bias.end());
    }
    return flat;
  }

  template <typename U>
  void assign(const std::vector<U>& flat) {
    if (flat.size() != count()) throw InvalidInput("params: tensor count does not match arch");
    std::size_t i = 0;
    for (auto& l : layers) {
      for (auto& w : l.weight) w = static_cast<T>(flat[i++]);
      for (auto& b : l.bias) b = static_cast<T>(flat[i++]);
    }
    ++version;
  }
};

template <typename T>
NetParams<T> make_params(const NetArch& arch) {
  arch.validate();
  auto ch = [&](int k) { return arch.base_channels << k; };
  NetParams<T> p;
  for (int k = 0; k < arch.levels; ++k) {
    p.layers.emplace_back(k == 0 ? arch.image_channels : ch(k), ch(k), 1, true);
    p.layers.emplace_back(ch(k), ch(k), 1, true);
    p.layers.emplace_back(ch(k), ch(k + 1), 2, true);
  }
  p.layers.emplace_back(ch(arch.levels), ch(arch.levels), 1, true);
  p.layers.emplace_back(ch(arch.levels), ch(arch.levels), 1, true);
  for (int k = arch.levels - 1; k >= 0; --k) {
    p.layers.emplace_back(ch(k + 1), ch(k), 1, true);
    p.layers.emplace_back(2 * ch(k), ch(k), 1, true);
    p.layers.emplace_back(ch(k), ch(k), 1, true);
  }
  p.layers.emplace_back(ch(0), arch.image_channels, 1, false);
  return p;
}

// He (fan-in) initialization: w ~ N(0, 2 / (9 * in_channels)), zero biases.
template <typename T>
NetParams<T> init_params(const NetArch& arch, std::uint64_t seed) {
  NetParams<T> p = make_params<T>(arch);
  Rng rng(seed);
  for (auto& l : p.layers) {
    std::normal_distribution<double> gauss(0.0, std::sqrt(2.0 / (9.0 * l.in_channels)));
    for (auto& w : l.weight) w = static_cast<T>(gauss(rng));
  }
  return p;
}

template <typename T>
struct ActivationTape {
  const NetParams<T>* params = nullptr;
  std::uint64_t version = 0;
  NetArch arch;
  std::vector<Tensor<T>> inputs;   // input of layer i
  std::vector<Tensor<T>> outputs;  // post-activation output of layer i
};

template <typename T>
struct ParamGrads {
  std::vector<ConvGrad<T>> layers;

  explicit ParamGrads(const NetParams<T>& p) {
    for (const auto& l : p.layers)
      layers.push_back({std::vector<T>(l.weight.size(), T(0)), std::vector<T>(l.bias.size(), T(0))});
  }

  [[nodiscard]] std::vector<T> flatten() const {
    std::vector<T> flat;
    for (const auto& l : layers) {
      flat.insert(flat.end(), l.weight.begin(), l.weight.end());
      flat.insert(flat.end(), l.bias.begin(), l.bias.end());
    }
    return flat;
  }

  void add(const ParamGrads& o, T scale = T(1)) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      for (std::size_t j = 0; j < layers[i].weight.size(); ++j) layers[i].weight[j] += scale * o.layers[i].weight[j];
      for (std::size_t j = 0; j < layers[i].bias.size(); ++j) layers[i].bias[j] += scale * o.layers[i].bias[j];
    }
  }

  void scale(T s) {
    for (auto& l : layers) {
      for (auto& w : l.weight) w *= s;
      for (auto& b : l.bias) b *= s;
    }
  }
};

template <typename T>
struct ForwardResult {
  Tensor<T> output;
  ActivationTape<T> tape;
};

template <typename T>
ForwardResult<T> forward(const NetParams<T>& params, const NetArch& arch, const Tensor<T>& input) {
  arch.check_input(input.channels, input.height, input.width);
  ActivationTape<T> tape{&params, params.version, arch, {}, {}};
  tape.inputs.reserve(params.layers.size());
  tape.outputs.reserve(params.layers.size());
  std::size_t li = 0;
  auto apply = [&](const Tensor<T>& x) -> const Tensor<T>& {
    tape.inputs.push_back(x);
    tape.outputs.push_back(conv_forward(params.layers[li++], x));
    return tape.outputs.back();
  };

  std::vector<Tensor<T>> skips;
  Tensor<T> feat = input;
  for (int k = 0; k < arch.levels; ++k) {
    feat = apply(feat);
    feat = apply(feat);
    skips.push_back(feat);
    feat = apply(feat);
  }
  feat = apply(feat);
  feat = apply(feat);
  for (int k = arch.levels - 1; k >= 0; --k) {
    const Tensor<T>& up = apply(upsample2x(feat));
    feat = apply(concat_channels(up, skips[static_cast<std::size_t>(k)]));
    feat = apply(feat);
  }
  Tensor<T> out = apply(feat);
  if (arch.residual)
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += input.data[i];
  return {std::move(out), std::move(tape)};
}

template <typename T>
struct BackwardResult {
  ParamGrads<T> grads;
  Tensor<T> d_input;
};

// Reverse pass through a tape produced by forward() on the same, unmodified
// params. Returns parameter gradients and dL/d(input).
template <typename T>
BackwardResult<T> backward(const NetParams<T>& params, const ActivationTape<T>& tape, const Tensor<T>& d_output) {
  if (tape.params != &params || tape.version != params.version || tape.inputs.size() != params.layers.size())
    throw InvalidInput("backward: stale activation tape");
  const NetArch& arch = tape.arch;
  BackwardResult<T> r{ParamGrads<T>(params), {}};
  std::size_t li = params.layers.size();
  auto back = [&](const Tensor<T>& d) {
    --li;
    return conv_backward(params.layers[li], tape.inputs[li], tape.outputs[li], d, r.grads.layers[li]);
  };

  Tensor<T> d = back(d_output);
  std::vector<Tensor<T>> d_skips(static_cast<std::size_t>(arch.levels));
  for (int k = 0; k < arch.levels; ++k) {
    d = back(d);
    d = back(d);
    const int up_channels = arch.base_channels << k;
    auto [d_up, d_skip] = split_channels(d, up_channels);
    d_skips[static_cast<std::size_t>(k)] = std::move(d_skip);
    d = upsample2x_backward(back(d_up));
  }
  d = back(d);
  d = back(d);
  for (int k = arch.levels - 1; k >= 0; --k) {
    d = back(d);
    const auto& ds = d_skips[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < d.size(); ++i) d.data[i] += ds.data[i];
    d = back(d);
    d = back(d);
  }
  if (arch.residual)
    for (std::size_t i = 0; i < d.size(); ++i) d.data[i] += d_output.data[i];
  r.d_input = std::move(d);
  return r;
}

// Convenience: inference on an Image (computed in T precision).
template <typename T>
Image run(const NetParams<T>& params, const NetArch& arch, const Image& img) {
  return to_image(forward(params, arch, to_tensor<T>(img)).output);
}

}  // namespace nidf::net
