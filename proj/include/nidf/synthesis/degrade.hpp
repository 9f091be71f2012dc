#pragma once

#include <cstdint>

#include "nidf/core/convolve.hpp"
#include "nidf/core/rng.hpp"

namespace nidf::synthesis {

struct NoiseSpec {
  double sigma = 10.0;  // standard deviation on the 0-255 scale
  std::uint64_t seed = 0;
};

inline constexpr double kNoiseLevels[] = {10.0, 20.0, 30.0, 40.0};

// Shares the circular convention with the Fourier-domain kernel recovery.
inline Image blur(const Image& img, const Psf& psf) { return fft_convolve(img, psf); }

// Adds i.i.d. Gaussian noise of standard deviation sigma/255. No clamping.
inline Image add_noise(Image img, const NoiseSpec& spec) {
  if (!(spec.sigma >= 0.0)) throw InvalidInput("add_noise: sigma must be >= 0");
  if (spec.sigma == 0.0) return img;
  Rng rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, spec.sigma / 255.0);
  for (auto& v : img.data) v += gauss(rng);
  return img;
}

}  // namespace nidf::synthesis
