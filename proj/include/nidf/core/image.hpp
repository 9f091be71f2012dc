#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nidf {

// Raised for inputs that violate a documented precondition. The CLI maps it
// to exit code 1; everything else that escapes is a runtime failure.
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class BoundaryMode { circular, replicate };

// Planar floating-point raster. Channel c occupies
// data[c*height*width, (c+1)*height*width), each plane row-major.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, int c = 1, double fill = 0.0) : height(h), width(w), channels(c) {
    if (h < 1 || w < 1) throw InvalidInput("image dimensions must be >= 1");
    if (c != 1 && c != 3) throw InvalidInput("image must have 1 or 3 channels");
    data.assign(static_cast<std::size_t>(h) * w * c, fill);
  }

  [[nodiscard]] std::size_t plane_size() const { return static_cast<std::size_t>(height) * width; }
  [[nodiscard]] std::size_t size() const { return data.size(); }
  [[nodiscard]] bool empty() const { return data.empty(); }

  double& at(int y, int x, int c = 0) { return data[c * plane_size() + static_cast<std::size_t>(y) * width + x]; }
  [[nodiscard]] double at(int y, int x, int c = 0) const {
    return data[c * plane_size() + static_cast<std::size_t>(y) * width + x];
  }

  std::span<double> plane(int c) { return {data.data() + c * plane_size(), plane_size()}; }
  [[nodiscard]] std::span<const double> plane(int c) const { return {data.data() + c * plane_size(), plane_size()}; }

  [[nodiscard]] bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }

  [[nodiscard]] double mean() const {
    return std::accumulate(data.begin(), data.end(), 0.0) / static_cast<double>(data.size());
  }
};

inline void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) throw InvalidInput(std::string(what) + ": image dimensions differ");
}

// Fixed luminance transform; single-channel images are returned unchanged.
inline Image luminance(const Image& img) {
  if (img.channels == 1) return img;
  Image out(img.height, img.width, 1);
  auto r = img.plane(0), g = img.plane(1), b = img.plane(2);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
  return out;
}

inline Image clamped(Image img) {
  for (auto& v : img.data) v = std::clamp(v, 0.0, 1.0);
  return img;
}

// Odd-sided square nonnegative kernel with unit mass.
class Psf {
 public:
  static constexpr double kSumTolerance = 1e-9;

  Psf() : Psf(delta(1)) {}

  // Validates the invariants; throws InvalidInput on violation.
  Psf(int side, std::vector<double> weights) : side_(side), weights_(std::move(weights)) {
    if (side < 1 || side % 2 == 0) throw InvalidInput("psf side must be odd and >= 1");
    if (weights_.size() != static_cast<std::size_t>(side) * side) throw InvalidInput("psf weight count != side*side");
    double sum = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidInput("psf weights must be finite and nonnegative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) throw InvalidInput("psf weights must sum to 1");
  }

  static Psf delta(int side) {
    std::vector<double> w(static_cast<std::size_t>(side) * side, 0.0);
    w[w.size() / 2] = 1.0;
    return {side, std::move(w)};
  }

  static Psf uniform(int side) {
    const auto n = static_cast<std::size_t>(side) * side;
    return {side, std::vector<double>(n, 1.0 / static_cast<double>(n))};
  }

  // Clips negatives and rescales to unit mass. All-zero input is rejected.
  static Psf normalized(int side, std::vector<double> weights) {
    double sum = 0.0;
    for (auto& w : weights) {
      if (!(w > 0.0)) w = 0.0;
      sum += w;
    }
    if (!(sum > 0.0)) throw InvalidInput("psf has no positive mass");
    for (auto& w : weights) w /= sum;
    return {side, std::move(weights)};
  }

  [[nodiscard]] int side() const { return side_; }
  [[nodiscard]] int half() const { return side_ / 2; }
  [[nodiscard]] double at(int y, int x) const { return weights_[static_cast<std::size_t>(y) * side_ + x]; }
  [[nodiscard]] const std::vector<double>& weights() const { return weights_; }

  bool operator==(const Psf&) const = default;

 private:
  int side_;
  std::vector<double> weights_;
};

struct GradientField {
  Image horizontal;
  Image vertical;
};

}  // namespace nidf
