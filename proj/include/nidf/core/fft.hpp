#pragma once

#include <fftw3.h>

#include <complex>
#include <cstring>
#include <map>
#include <mutex>
#include <span>
#include <tuple>
#include <vector>

#include "nidf/core/image.hpp"

namespace nidf {

using Complex = std::complex<double>;

// Unnormalized 2-D DFT of one plane; inverse() divides by height*width.
struct Spectrum {
  int height = 0;
  int width = 0;
  std::vector<Complex> bins;

  Spectrum() = default;
  Spectrum(int h, int w, Complex fill = {}) : height(h), width(w), bins(static_cast<std::size_t>(h) * w, fill) {}

  Complex& operator[](std::size_t i) { return bins[i]; }
  const Complex& operator[](std::size_t i) const { return bins[i]; }
  [[nodiscard]] std::size_t size() const { return bins.size(); }
};

namespace detail {

// FFTW's planner is not reentrant. Plans are created once per (shape,
// direction) under a lock, always against fftw_malloc'd buffers so the
// new-array execute interface sees the alignment the plan was made for.
class FftPlanCache {
 public:
  static FftPlanCache& instance() {
    static FftPlanCache cache;
    return cache;
  }

  fftw_plan plan(int h, int w, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(h, w, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    auto* in = fftw_alloc_complex(static_cast<std::size_t>(h) * w);
    auto* out = fftw_alloc_complex(static_cast<std::size_t>(h) * w);
    fftw_plan p = fftw_plan_dft_2d(h, w, in, out, sign, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    plans_.emplace(key, p);
    return p;
  }

  ~FftPlanCache() {
    for (auto& [key, p] : plans_) fftw_destroy_plan(p);
  }

 private:
  FftPlanCache() = default;
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

class FftwBuffer {
 public:
  explicit FftwBuffer(std::size_t n) : n_(n), ptr_(fftw_alloc_complex(n)) {}
  ~FftwBuffer() { fftw_free(ptr_); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* get() { return ptr_; }
  Complex* as_complex() { return reinterpret_cast<Complex*>(ptr_); }
  [[nodiscard]] std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  fftw_complex* ptr_;
};

inline void transform(int h, int w, int sign, std::span<const Complex> src, std::span<Complex> dst) {
  const auto n = static_cast<std::size_t>(h) * w;
  FftwBuffer in(n), out(n);
  std::memcpy(in.get(), src.data(), n * sizeof(Complex));
  fftw_execute_dft(FftPlanCache::instance().plan(h, w, sign), in.get(), out.get());
  std::memcpy(static_cast<void*>(dst.data()), out.get(), n * sizeof(Complex));
}

}  // namespace detail

inline Spectrum fft2(std::span<const double> plane, int h, int w) {
  if (plane.size() != static_cast<std::size_t>(h) * w) throw InvalidInput("fft2: plane size mismatch");
  std::vector<Complex> src(plane.begin(), plane.end());
  Spectrum s(h, w);
  detail::transform(h, w, FFTW_FORWARD, src, s.bins);
  return s;
}

inline Spectrum fft2(const Image& img, int channel = 0) { return fft2(img.plane(channel), img.height, img.width); }

inline std::vector<Complex> ifft2_complex(const Spectrum& s) {
  std::vector<Complex> out(s.size());
  detail::transform(s.height, s.width, FFTW_BACKWARD, s.bins, out);
  const double scale = 1.0 / static_cast<double>(s.size());
  for (auto& v : out) v *= scale;
  return out;
}

// Real part of the inverse transform.
inline std::vector<double> ifft2(const Spectrum& s) {
  auto c = ifft2_complex(s);
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
  return out;
}

inline Image ifft2_image(const Spectrum& s) {
  Image img(s.height, s.width, 1);
  img.data = ifft2(s);
  return img;
}

// Embeds a kernel into an h x w canvas with its center at the origin,
// wrapping circularly, so that fft(canvas) is the transfer function of
// circular convolution with the kernel.
inline std::vector<double> kernel_canvas(const Psf& psf, int h, int w) {
  std::vector<double> canvas(static_cast<std::size_t>(h) * w, 0.0);
  const int r = psf.half();
  for (int i = 0; i < psf.side(); ++i) {
    for (int j = 0; j < psf.side(); ++j) {
      const int y = ((i - r) % h + h) % h;
      const int x = ((j - r) % w + w) % w;
      canvas[static_cast<std::size_t>(y) * w + x] += psf.at(i, j);
    }
  }
  return canvas;
}

inline Spectrum transfer_function(const Psf& psf, int h, int w) { return fft2(kernel_canvas(psf, h, w), h, w); }

// Transfer functions of the circular forward differences x[i+1] - x[i].
inline Spectrum horizontal_difference_transfer(int h, int w) {
  std::vector<double> canvas(static_cast<std::size_t>(h) * w, 0.0);
  canvas[0] -= 1.0;
  canvas[w > 1 ? (w - 1) : 0] += 1.0;
  return fft2(canvas, h, w);
}

inline Spectrum vertical_difference_transfer(int h, int w) {
  std::vector<double> canvas(static_cast<std::size_t>(h) * w, 0.0);
  canvas[0] -= 1.0;
  canvas[static_cast<std::size_t>(h > 1 ? h - 1 : 0) * w] += 1.0;
  return fft2(canvas, h, w);
}

}  // namespace nidf
