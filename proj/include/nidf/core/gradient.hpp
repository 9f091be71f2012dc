#pragma once

#include "nidf/core/image.hpp"

namespace nidf {

// Circular forward differences: h(y,x) = I(y,x+1) - I(y,x), v(y,x) = I(y+1,x) - I(y,x).
// The wrap makes the operator diagonal in the Fourier basis.
inline GradientField gradient(const Image& img) {
  if (img.empty()) throw InvalidInput("gradient: empty image");
  GradientField g{Image(img.height, img.width, img.channels), Image(img.height, img.width, img.channels)};
  const int h = img.height, w = img.width;
  for (int c = 0; c < img.channels; ++c) {
    for (int y = 0; y < h; ++y) {
      const int yn = (y + 1) % h;
      for (int x = 0; x < w; ++x) {
        const int xn = (x + 1) % w;
        g.horizontal.at(y, x, c) = img.at(y, xn, c) - img.at(y, x, c);
        g.vertical.at(y, x, c) = img.at(yn, x, c) - img.at(y, x, c);
      }
    }
  }
  return g;
}

// Adjoint of gradient(): the circular backward-difference divergence, negated.
inline Image gradient_adjoint(const GradientField& g) {
  const Image& gh = g.horizontal;
  const Image& gv = g.vertical;
  require_same_shape(gh, gv, "gradient_adjoint");
  const int h = gh.height, w = gh.width;
  Image out(h, w, gh.channels);
  for (int c = 0; c < gh.channels; ++c) {
    for (int y = 0; y < h; ++y) {
      const int yp = (y - 1 + h) % h;
      for (int x = 0; x < w; ++x) {
        const int xp = (x - 1 + w) % w;
        out.at(y, x, c) = gh.at(y, xp, c) - gh.at(y, x, c) + gv.at(yp, x, c) - gv.at(y, x, c);
      }
    }
  }
  return out;
}

}  // namespace nidf
