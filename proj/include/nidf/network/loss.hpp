#pragma once

#include "nidf/core/image.hpp"
#include "nidf/network/layers.hpp"

namespace nidf::net {

// All losses are mean-reduced squared errors: sum((a-b)^2) / element count.

inline double squared_error_mean(const Image& a, const Image& b, const char* what) {
  require_same_shape(a, b, what);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.data.size());
}

inline double loss_denoiser(const Image& b_hat, const Image& b) { return squared_error_mean(b_hat, b, "loss_denoiser"); }

inline double loss_deblurring(const Image& i_hat, const Image& i) {
  return squared_error_mean(i_hat, i, "loss_deblurring");
}

inline constexpr double kJointDeblurWeight = 0.5;

inline double loss_joint(const Image& b1, const Image& b, const Image& i1, const Image& i) {
  return loss_denoiser(b1, b) + kJointDeblurWeight * loss_deblurring(i1, i);
}

template <typename T>
struct LossWithGrad {
  double value = 0.0;
  Tensor<T> grad;  // dL/d(prediction)
};

// weight * mean((pred - target)^2) and its gradient with respect to pred.
template <typename T>
LossWithGrad<T> mse_with_grad(const Tensor<T>& pred, const Tensor<T>& target, double weight = 1.0) {
  if (!pred.same_shape(target)) throw InvalidInput("loss: shape mismatch");
  LossWithGrad<T> r{0.0, Tensor<T>(pred.channels, pred.height, pred.width)};
  const double n = static_cast<double>(pred.size());
  const T g = static_cast<T>(2.0 * weight / n);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const T d = pred.data[i] - target.data[i];
    acc += static_cast<double>(d) * static_cast<double>(d);
    r.grad.data[i] = g * d;
  }
  r.value = weight * acc / n;
  return r;
}

}  // namespace nidf::net
