#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "nidf/core/image.hpp"

namespace nidf::net {

// Dense CHW feature map.
template <typename T>
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(int c, int h, int w, T fill = T(0))
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

  [[nodiscard]] std::size_t plane_size() const { return static_cast<std::size_t>(height) * width; }
  [[nodiscard]] std::size_t size() const { return data.size(); }
  T* plane(int c) { return data.data() + c * plane_size(); }
  [[nodiscard]] const T* plane(int c) const { return data.data() + c * plane_size(); }
  [[nodiscard]] bool same_shape(const Tensor& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

template <typename T>
Tensor<T> to_tensor(const Image& img) {
  Tensor<T> t(img.channels, img.height, img.width);
  std::transform(img.data.begin(), img.data.end(), t.data.begin(), [](double v) { return static_cast<T>(v); });
  return t;
}

template <typename T>
Image to_image(const Tensor<T>& t) {
  Image img(t.height, t.width, t.channels);
  std::transform(t.data.begin(), t.data.end(), img.data.begin(), [](T v) { return static_cast<double>(v); });
  return img;
}

inline constexpr double kLeakySlope = 0.2;

// 3x3 convolution (cross-correlation), zero padding 1, stride 1 or 2.
// Weight layout: [out][in][ky][kx].
template <typename T>
struct Conv3x3 {
  int in_channels = 0;
  int out_channels = 0;
  int stride = 1;
  bool activated = true;  // leaky ReLU on the output
  std::vector<T> weight;
  std::vector<T> bias;

  Conv3x3() = default;
  Conv3x3(int cin, int cout, int s, bool act)
      : in_channels(cin),
        out_channels(cout),
        stride(s),
        activated(act),
        weight(static_cast<std::size_t>(cout) * cin * 9, T(0)),
        bias(static_cast<std::size_t>(cout), T(0)) {}

  [[nodiscard]] int out_size(int n) const { return stride == 1 ? n : (n + 1) / 2; }
  [[nodiscard]] std::size_t weight_index(int co, int ci, int ky, int kx) const {
    return ((static_cast<std::size_t>(co) * in_channels + ci) * 3 + ky) * 3 + kx;
  }
};

namespace detail {

// Output rows/cols o with 0 <= o*stride + k - 1 < n_in, as a half-open range.
inline std::pair<int, int> valid_range(int k, int stride, int n_in, int n_out) {
  int lo = 0;
  while (lo < n_out && lo * stride + k - 1 < 0) ++lo;
  int hi = n_out;
  while (hi > lo && (hi - 1) * stride + k - 1 >= n_in) --hi;
  return {lo, hi};
}

}  // namespace detail

template <typename T>
Tensor<T> conv_forward(const Conv3x3<T>& layer, const Tensor<T>& in) {
  const int oh = layer.out_size(in.height), ow = layer.out_size(in.width), s = layer.stride;
  Tensor<T> out(layer.out_channels, oh, ow);
  for (int co = 0; co < layer.out_channels; ++co) {
    T* dst = out.plane(co);
    std::fill(dst, dst + out.plane_size(), layer.bias[co]);
    for (int ci = 0; ci < layer.in_channels; ++ci) {
      const T* src = in.plane(ci);
      for (int ky = 0; ky < 3; ++ky) {
        const auto [y0, y1] = detail::valid_range(ky, s, in.height, oh);
        for (int kx = 0; kx < 3; ++kx) {
          const auto [x0, x1] = detail::valid_range(kx, s, in.width, ow);
          const T w = layer.weight[layer.weight_index(co, ci, ky, kx)];
          for (int y = y0; y < y1; ++y) {
            T* drow = dst + static_cast<std::size_t>(y) * ow;
            const T* srow = src + static_cast<std::size_t>(y * s + ky - 1) * in.width + (kx - 1);
            if (s == 1) {
              for (int x = x0; x < x1; ++x) drow[x] += w * srow[x];
            } else {
              for (int x = x0; x < x1; ++x) drow[x] += w * srow[x * s];
            }
          }
        }
      }
    }
    if (layer.activated)
      for (std::size_t i = 0; i < out.plane_size(); ++i)
        if (dst[i] < T(0)) dst[i] *= T(kLeakySlope);
  }
  return out;
}

template <typename T>
struct ConvGrad {
  std::vector<T> weight;
  std::vector<T> bias;
};

// Given the layer input, its (post-activation) output and dL/d(output),
// accumulates parameter gradients into grad and returns dL/d(input).
template <typename T>
Tensor<T> conv_backward(const Conv3x3<T>& layer, const Tensor<T>& in, const Tensor<T>& out, Tensor<T> d_out,
                        ConvGrad<T>& grad) {
  const int oh = out.height, ow = out.width, s = layer.stride;
  if (layer.activated)
    for (std::size_t i = 0; i < d_out.size(); ++i)
      if (out.data[i] < T(0)) d_out.data[i] *= T(kLeakySlope);

  Tensor<T> d_in(in.channels, in.height, in.width);
  for (int co = 0; co < layer.out_channels; ++co) {
    const T* dy = d_out.plane(co);
    T bsum = 0;
    for (std::size_t i = 0; i < d_out.plane_size(); ++i) bsum += dy[i];
    grad.bias[co] += bsum;
    for (int ci = 0; ci < layer.in_channels; ++ci) {
      const T* src = in.plane(ci);
      T* dsrc = d_in.plane(ci);
      for (int ky = 0; ky < 3; ++ky) {
        const auto [y0, y1] = detail::valid_range(ky, s, in.height, oh);
        for (int kx = 0; kx < 3; ++kx) {
          const auto [x0, x1] = detail::valid_range(kx, s, in.width, ow);
          const std::size_t wi = layer.weight_index(co, ci, ky, kx);
          const T w = layer.weight[wi];
          T acc = 0;
          for (int y = y0; y < y1; ++y) {
            const T* dyrow = dy + static_cast<std::size_t>(y) * ow;
            const std::size_t off = static_cast<std::size_t>(y * s + ky - 1) * in.width + (kx - 1);
            const T* srow = src + off;
            T* dsrow = dsrc + off;
            if (s == 1) {
              for (int x = x0; x < x1; ++x) {
                acc += dyrow[x] * srow[x];
                dsrow[x] += w * dyrow[x];
              }
            } else {
              for (int x = x0; x < x1; ++x) {
                acc += dyrow[x] * srow[x * s];
                dsrow[x * s] += w * dyrow[x];
              }
            }
          }
          grad.weight[wi] += acc;
        }
      }
    }
  }
  return d_in;
}

template <typename T>
Tensor<T> upsample2x(const Tensor<T>& in) {
  Tensor<T> out(in.channels, in.height * 2, in.width * 2);
  for (int c = 0; c < in.channels; ++c)
    for (int y = 0; y < out.height; ++y)
      for (int x = 0; x < out.width; ++x)
        out.plane(c)[static_cast<std::size_t>(y) * out.width + x] = in.plane(c)[static_cast<std::size_t>(y / 2) * in.width + x / 2];
  return out;
}

template <typename T>
Tensor<T> upsample2x_backward(const Tensor<T>& d_out) {
  Tensor<T> d_in(d_out.channels, d_out.height / 2, d_out.width / 2);
  for (int c = 0; c < d_out.channels; ++c)
    for (int y = 0; y < d_out.height; ++y)
      for (int x = 0; x < d_out.width; ++x)
        d_in.plane(c)[static_cast<std::size_t>(y / 2) * d_in.width + x / 2] += d_out.plane(c)[static_cast<std::size_t>(y) * d_out.width + x];
  return d_in;
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  Tensor<T> out(a.channels + b.channels, a.height, a.width);
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

// Inverse of concat_channels for gradients: first `channels` planes, rest.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& t, int channels) {
  Tensor<T> a(channels, t.height, t.width), b(t.channels - channels, t.height, t.width);
  std::copy(t.data.begin(), t.data.begin() + static_cast<std::ptrdiff_t>(a.size()), a.data.begin());
  std::copy(t.data.begin() + static_cast<std::ptrdiff_t>(a.size()), t.data.end(), b.data.begin());
  return {std::move(a), std::move(b)};
}

}  // namespace nidf::net
