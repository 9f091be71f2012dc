#pragma once

#include <algorithm>

#include "nidf/core/fft.hpp"
#include "nidf/core/image.hpp"

namespace nidf {

namespace detail {

inline void check_kernel_fits(const Image& img, const Psf& psf) {
  if (img.empty()) throw InvalidInput("convolve: empty image");
  if (psf.side() > 2 * std::min(img.height, img.width)) throw InvalidInput("convolve: psf larger than twice the image");
}

inline int wrap(int i, int n) { return ((i % n) + n) % n; }

}  // namespace detail

// out(y,x) = sum_{i,j} k(i,j) * in(y - (i - r), x - (j - r)), r = side/2.
// This is true convolution (kernel flipped), matching the Fourier product.
inline Image convolve(const Image& img, const Psf& psf, BoundaryMode mode) {
  detail::check_kernel_fits(img, psf);
  const int h = img.height, w = img.width, r = psf.half(), s = psf.side();
  Image out(h, w, img.channels);
  for (int c = 0; c < img.channels; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = 0; i < s; ++i) {
          int sy = y - (i - r);
          sy = mode == BoundaryMode::circular ? detail::wrap(sy, h) : std::clamp(sy, 0, h - 1);
          for (int j = 0; j < s; ++j) {
            int sx = x - (j - r);
            sx = mode == BoundaryMode::circular ? detail::wrap(sx, w) : std::clamp(sx, 0, w - 1);
            acc += psf.at(i, j) * img.at(sy, sx, c);
          }
        }
        out.at(y, x, c) = acc;
      }
    }
  }
  return out;
}

// Circular convolution through the DFT.
inline Image fft_convolve(const Image& img, const Psf& psf) {
  detail::check_kernel_fits(img, psf);
  const Spectrum k = transfer_function(psf, img.height, img.width);
  Image out(img.height, img.width, img.channels);
  for (int c = 0; c < img.channels; ++c) {
    Spectrum s = fft2(img, c);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] *= k[i];
    auto plane = ifft2(s);
    std::copy(plane.begin(), plane.end(), out.plane(c).begin());
  }
  return out;
}

}  // namespace nidf
