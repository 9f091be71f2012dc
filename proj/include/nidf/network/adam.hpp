#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "nidf/network/unet.hpp"

namespace nidf::net {

struct AdamState {
  static constexpr double beta1 = 0.9;
  static constexpr double beta2 = 0.999;
  static constexpr double epsilon = 1e-8;

  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// One bias-corrected Adam update over a flat parameter vector.
inline void adam_update(std::vector<double>& params, const std::vector<double>& grads, AdamState& s, double lr) {
  if (params.size() != grads.size() || s.m.size() != params.size()) throw InvalidInput("adam: shape mismatch");
  ++s.t;
  const double c1 = 1.0 - std::pow(AdamState::beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(AdamState::beta2, static_cast<double>(s.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    s.m[i] = AdamState::beta1 * s.m[i] + (1.0 - AdamState::beta1) * g;
    s.v[i] = AdamState::beta2 * s.v[i] + (1.0 - AdamState::beta2) * g * g;
    const double m_hat = s.m[i] / c1, v_hat = s.v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + AdamState::epsilon);
  }
}

template <typename T>
void adam_step(NetParams<T>& params, const ParamGrads<T>& grads, AdamState& state, double lr) {
  if (state.m.empty() && state.t == 0) state = AdamState(params.count());
  const auto pf = params.flatten();
  const auto gf = grads.flatten();
  std::vector<double> p(pf.begin(), pf.end()), g(gf.begin(), gf.end());
  adam_update(p, g, state, lr);
  params.assign(p);
}

}  // namespace nidf::net
