#pragma once

#include <array>
#include <cmath>
#include <span>

#include "nidf/core/image.hpp"

namespace nidf {

// Returned by psnr() when the two images are identical.
inline constexpr double kPsnrCap = 99.0;

inline double mean_squared_error(const Image& a, const Image& b) {
  require_same_shape(a, b, "mse");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.data.size());
}

// Peak 1.0; MSE is pooled over every channel.
inline double psnr(const Image& a, const Image& b) {
  const double mse = mean_squared_error(a, b);
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

struct SsimParams {
  static constexpr int window = 11;
  static constexpr double sigma = 1.5;
  static constexpr double c1 = 0.01 * 0.01;
  static constexpr double c2 = 0.03 * 0.03;
};

namespace detail {

inline std::array<double, SsimParams::window> ssim_kernel_1d() {
  std::array<double, SsimParams::window> k{};
  const int r = SsimParams::window / 2;
  double sum = 0.0;
  for (int i = 0; i < SsimParams::window; ++i) {
    k[i] = std::exp(-double((i - r) * (i - r)) / (2.0 * SsimParams::sigma * SsimParams::sigma));
    sum += k[i];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable Gaussian filter, valid region only: output is (h-10) x (w-10).
inline std::vector<double> gaussian_valid(std::span<const double> src, int h, int w) {
  static const auto k = ssim_kernel_1d();
  constexpr int n = SsimParams::window;
  const int oh = h - n + 1, ow = w - n + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += k[j] * src[static_cast<std::size_t>(y) * w + x + j];
      rows[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += k[i] * rows[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  return out;
}

}  // namespace detail

// Mean local SSIM over all fully-contained 11x11 Gaussian windows.
// Colour inputs are reduced to luminance first.
inline double ssim(const Image& a_in, const Image& b_in) {
  require_same_shape(a_in, b_in, "ssim");
  if (std::min(a_in.height, a_in.width) < SsimParams::window) throw InvalidInput("ssim: image smaller than window");
  const Image a = luminance(a_in), b = luminance(b_in);
  const int h = a.height, w = a.width;
  const std::size_t n = a.plane_size();
  std::vector<double> aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    aa[i] = a.data[i] * a.data[i];
    bb[i] = b.data[i] * b.data[i];
    ab[i] = a.data[i] * b.data[i];
  }
  const auto mu_a = detail::gaussian_valid(a.data, h, w);
  const auto mu_b = detail::gaussian_valid(b.data, h, w);
  const auto e_aa = detail::gaussian_valid(aa, h, w);
  const auto e_bb = detail::gaussian_valid(bb, h, w);
  const auto e_ab = detail::gaussian_valid(ab, h, w);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = e_aa[i] - ma * ma, vb = e_bb[i] - mb * mb, cov = e_ab[i] - ma * mb;
    total += ((2 * ma * mb + SsimParams::c1) * (2 * cov + SsimParams::c2)) /
             ((ma * ma + mb * mb + SsimParams::c1) * (va + vb + SsimParams::c2));
  }
  return total / static_cast<double>(mu_a.size());
}

// Maximum normalized cross-correlation over every integer translation that
// leaves some overlap (equivalent to zero-padding both onto a shared canvas).
inline double kernel_similarity(std::span<const double> p, int side_p, std::span<const double> q, int side_q) {
  double np = 0.0, nq = 0.0;
  for (double v : p) np += v * v;
  for (double v : q) nq += v * v;
  if (!(np > 0.0) || !(nq > 0.0)) throw InvalidInput("kernel_similarity: all-zero kernel");
  double best = -1.0;
  for (int dy = -(side_p - 1); dy <= side_q - 1; ++dy) {
    for (int dx = -(side_p - 1); dx <= side_q - 1; ++dx) {
      double acc = 0.0;
      for (int y = std::max(0, -dy); y < std::min(side_p, side_q - dy); ++y)
        for (int x = std::max(0, -dx); x < std::min(side_p, side_q - dx); ++x)
          acc += p[static_cast<std::size_t>(y) * side_p + x] * q[static_cast<std::size_t>(y + dy) * side_q + x + dx];
      best = std::max(best, acc);
    }
  }
  return best / std::sqrt(np * nq);
}

inline double kernel_similarity(const Psf& p, const Psf& q) {
  return kernel_similarity(p.weights(), p.side(), q.weights(), q.side());
}

}  // namespace nidf
