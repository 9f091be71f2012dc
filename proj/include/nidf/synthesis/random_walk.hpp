#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "nidf/core/image.hpp"
#include "nidf/core/rng.hpp"

namespace nidf::synthesis {

struct WalkParams {
  int half_side = 3;  // kernel side is 2*half_side + 1
  int steps = 256;
  double inertia = 0.7;
  double jitter = 0.5;
  std::uint64_t seed = 0;

  static constexpr int kMinHalfSide = 3;
  static constexpr int kMaxHalfSide = 24;

  void validate() const {
    if (half_side < kMinHalfSide || half_side > kMaxHalfSide) throw InvalidInput("walk: half side must be in [3, 24]");
    if (steps < 2) throw InvalidInput("walk: steps must be >= 2");
    if (!(inertia >= 0.0 && inertia < 1.0)) throw InvalidInput("walk: inertia must be in [0, 1)");
    if (!(jitter >= 0.0)) throw InvalidInput("walk: jitter must be >= 0");
  }
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// Inertial random walk starting at rest:
//   x_{t+1} = x_t + v_t,  v_{t+1} = inertia * v_t + jitter * g_t.
inline std::vector<Point2> random_walk_trajectory(const WalkParams& params) {
  params.validate();
  Rng rng(params.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Point2> path(static_cast<std::size_t>(params.steps));
  Point2 pos, vel;
  for (auto& p : path) {
    p = pos;
    pos.x += vel.x;
    pos.y += vel.y;
    const double gx = gauss(rng);
    const double gy = gauss(rng);
    vel.x = params.inertia * vel.x + params.jitter * gx;
    vel.y = params.inertia * vel.y + params.jitter * gy;
  }
  return path;
}

// Rasterizes a random-walk trajectory into a (2l+1)^2 kernel. The path is
// recentred on its centroid and, if it overhangs the grid, shrunk uniformly
// to fit; samples are deposited bilinearly.
inline Psf random_walk_psf(const WalkParams& params) {
  auto path = random_walk_trajectory(params);
  const int l = params.half_side, side = 2 * l + 1;

  Point2 centroid;
  for (const auto& p : path) {
    centroid.x += p.x;
    centroid.y += p.y;
  }
  centroid.x /= static_cast<double>(path.size());
  centroid.y /= static_cast<double>(path.size());
  double extent = 0.0;
  for (auto& p : path) {
    p.x -= centroid.x;
    p.y -= centroid.y;
    extent = std::max({extent, std::abs(p.x), std::abs(p.y)});
  }
  if (extent > l) {
    const double shrink = l / extent;
    for (auto& p : path) {
      p.x *= shrink;
      p.y *= shrink;
    }
  }

  std::vector<double> grid(static_cast<std::size_t>(side) * side, 0.0);
  auto deposit = [&](int y, int x, double w) {
    y = std::clamp(y, 0, side - 1);
    x = std::clamp(x, 0, side - 1);
    grid[static_cast<std::size_t>(y) * side + x] += w;
  };
  for (const auto& p : path) {
    const double gx = p.x + l, gy = p.y + l;
    const int x0 = static_cast<int>(std::floor(gx)), y0 = static_cast<int>(std::floor(gy));
    const double fx = gx - x0, fy = gy - y0;
    deposit(y0, x0, (1 - fy) * (1 - fx));
    deposit(y0, x0 + 1, (1 - fy) * fx);
    deposit(y0 + 1, x0, fy * (1 - fx));
    deposit(y0 + 1, x0 + 1, fy * fx);
  }
  return Psf::normalized(side, std::move(grid));
}

}  // namespace nidf::synthesis
