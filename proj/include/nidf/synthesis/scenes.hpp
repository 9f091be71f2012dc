#pragma once

#include <cstdint>

#include "nidf/core/image.hpp"
#include "nidf/core/rng.hpp"

namespace nidf::synthesis {

// Procedural stand-in for natural photographs: a shaded background, a few
// hard-edged ellipses and rectangles, and faint pixel texture so that the
// spectrum has no empty bins.
inline Image procedural_scene(int height, int width, std::uint64_t seed, int channels = 1, double grain_amplitude = 0.03) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Image img(height, width, channels);
  for (int c = 0; c < channels; ++c) {
    const double base = 0.3 + 0.4 * unit(rng);
    const double gx = (unit(rng) - 0.5) * 0.4, gy = (unit(rng) - 0.5) * 0.4;
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        img.at(y, x, c) = base + gx * (x / double(width) - 0.5) + gy * (y / double(height) - 0.5);
  }
  const int shapes = 5 + static_cast<int>(unit(rng) * 6);
  for (int s = 0; s < shapes; ++s) {
    const bool ellipse = unit(rng) < 0.5;
    const double cx = unit(rng) * width, cy = unit(rng) * height;
    const double rx = (0.08 + 0.22 * unit(rng)) * width, ry = (0.08 + 0.22 * unit(rng)) * height;
    double value[3];
    for (auto& v : value) v = 0.05 + 0.9 * unit(rng);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double dx = (x - cx) / rx, dy = (y - cy) / ry;
        const bool inside = ellipse ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
        if (!inside) continue;
        for (int c = 0; c < channels; ++c) img.at(y, x, c) = value[c];
      }
    }
  }
  std::uniform_real_distribution<double> grain(-grain_amplitude, grain_amplitude);
  for (auto& v : img.data) v = std::clamp(v + grain(rng), 0.0, 1.0);
  return img;
}

}  // namespace nidf::synthesis
