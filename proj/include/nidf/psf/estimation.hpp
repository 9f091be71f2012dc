#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "nidf/core/convolve.hpp"
#include "nidf/core/fft.hpp"
#include "nidf/core/gradient.hpp"
#include "nidf/core/metrics.hpp"

namespace nidf::psf {

struct HqsConfig {
  double lambda0 = 0.002;        // weight of the l0 gradient term
  double mu_exemplar = 0.001;    // weight of ||grad I_l - grad I_1||^2
  double beta0 = 10.0;           // initial splitting penalty; large enough that I_l starts on the exemplar edges
  double beta_growth = 2.0;
  double beta_max = 1e5;
  int outer_iters = 5;
  double kernel_ridge = 1.0;     // Tikhonov weight on the kernel; absorbs noise in B_1
  double kernel_prune = 0.05;    // zero weights below this fraction of the max
  double epsilon_wiener = 1e-3;  // spectral floor of the direct deconvolution
  bool gradient_domain = true;   // estimate the kernel from image gradients

  void validate() const {
    if (!(lambda0 > 0 && mu_exemplar > 0 && beta0 > 0 && beta_max > 0 && kernel_ridge > 0 && epsilon_wiener > 0))
      throw InvalidInput("hqs: weights must be positive");
    if (!(beta_growth > 1.0)) throw InvalidInput("hqs: beta growth must exceed 1");
    if (!(beta0 < beta_max)) throw InvalidInput("hqs: beta0 must be below beta_max");
    if (outer_iters < 1) throw InvalidInput("hqs: outer iterations must be >= 1");
    if (!(kernel_prune >= 0.0 && kernel_prune < 0.5)) throw InvalidInput("hqs: kernel prune must be in [0, 0.5)");
  }
};

// A kernel on the full h x w image grid, origin-centred with circular wrap.
struct KernelCanvas {
  int height = 0;
  int width = 0;
  std::vector<double> values;
};

// Turns a full-grid kernel estimate into a Psf: negatives to zero, values
// below prune*max to zero, a side x side window cut around the mass
// centroid, unit-sum normalization.
inline Psf project_kernel(const KernelCanvas& k, int side, double prune) {
  if (side < 1 || side % 2 == 0) throw InvalidInput("kernel side must be odd");
  if (side > std::min(k.height, k.width)) throw InvalidInput("kernel side exceeds the image");
  const int h = k.height, w = k.width;
  std::vector<double> v(k.values);
  double peak = 0.0;
  for (auto& x : v) {
    if (!(x > 0.0)) x = 0.0;
    peak = std::max(peak, x);
  }
  if (!(peak > 0.0)) throw InvalidInput("kernel estimate has no positive mass");
  for (auto& x : v)
    if (x < prune * peak) x = 0.0;

  // Centroid in shifted coordinates where the origin sits at (h/2, w/2).
  double mass = 0.0, cy = 0.0, cx = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double m = v[static_cast<std::size_t>(y) * w + x];
      if (m == 0.0) continue;
      mass += m;
      cy += m * ((y + h / 2) % h);
      cx += m * ((x + w / 2) % w);
    }
  const int oy = static_cast<int>(std::lround(cy / mass)) - h / 2;
  const int ox = static_cast<int>(std::lround(cx / mass)) - w / 2;
  const int r = side / 2;
  std::vector<double> out(static_cast<std::size_t>(side) * side);
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j) {
      const int y = ((oy + i - r) % h + h) % h;
      const int x = ((ox + j - r) % w + w) % w;
      out[static_cast<std::size_t>(i) * side + j] = v[static_cast<std::size_t>(y) * w + x];
    }
  return Psf::normalized(side, std::move(out));
}

// Regularized spectral division:
//   P = IDFT( DFT(B1) conj(DFT(I1)) / (|DFT(I1)|^2 + eps) )
// Colour inputs are reduced to luminance. Bins where the denominator is
// exactly zero (eps = 0 and an empty image bin) are left at zero.
inline KernelCanvas fft_deconv_canvas(const Image& b1_in, const Image& i1_in, double eps) {
  require_same_shape(b1_in, i1_in, "fft_deconv");
  if (!(eps >= 0.0)) throw InvalidInput("fft_deconv: eps must be >= 0");
  const Image b1 = luminance(b1_in), i1 = luminance(i1_in);
  if (std::all_of(i1.data.begin(), i1.data.end(), [](double v) { return v == 0.0; }))
    throw InvalidInput("fft_deconv: sharp image is all zero");
  const Spectrum bs = fft2(b1), is = fft2(i1);
  Spectrum ps(bs.height, bs.width);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double den = std::norm(is[i]) + eps;
    if (den > 0.0) ps[i] = bs[i] * std::conj(is[i]) / den;
  }
  return {b1.height, b1.width, ifft2(ps)};
}

inline Psf fft_deconv(const Image& b1, const Image& i1, double eps, int side) {
  return project_kernel(fft_deconv_canvas(b1, i1, eps), side, 0.0);
}

// Exact minimizer of lambda0*||g||_0 + beta*||g - grad||^2 with the l0 count
// taken over joint (h, v) sites: keep the pair where h^2 + v^2 >= lambda0/beta.
inline GradientField latent_g_step(const GradientField& grad, double lambda0, double beta) {
  if (!(beta > 0.0)) throw InvalidInput("g-step: beta must be positive");
  require_same_shape(grad.horizontal, grad.vertical, "g-step");
  GradientField g = grad;
  const double threshold = lambda0 / beta;
  for (std::size_t i = 0; i < g.horizontal.data.size(); ++i) {
    const double h = g.horizontal.data[i], v = g.vertical.data[i];
    if (h * h + v * v < threshold) {
      g.horizontal.data[i] = 0.0;
      g.vertical.data[i] = 0.0;
    }
  }
  return g;
}

inline std::size_t nonzero_sites(const GradientField& g) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < g.horizontal.data.size(); ++i)
    if (g.horizontal.data[i] != 0.0 || g.vertical.data[i] != 0.0) ++n;
  return n;
}

// Spectra that stay fixed while the kernel is fixed.
struct LatentSystem {
  Spectrum kernel, dh, dv, b1, exemplar_h, exemplar_v;

  LatentSystem(const Image& b1_img, const Image& i1_img, const Psf& k) {
    require_same_shape(b1_img, i1_img, "latent step");
    if (b1_img.channels != 1) throw InvalidInput("latent step: expects single-channel images");
    const int h = b1_img.height, w = b1_img.width;
    kernel = transfer_function(k, h, w);
    dh = horizontal_difference_transfer(h, w);
    dv = vertical_difference_transfer(h, w);
    b1 = fft2(b1_img);
    const Spectrum i1 = fft2(i1_img);
    exemplar_h = Spectrum(h, w);
    exemplar_v = Spectrum(h, w);
    for (std::size_t i = 0; i < i1.size(); ++i) {
      exemplar_h[i] = dh[i] * i1[i];
      exemplar_v[i] = dv[i] * i1[i];
    }
  }

  // argmin_I ||K*I - B1||^2 + mu||grad I - grad I1||^2 + beta||grad I - g||^2
  [[nodiscard]] Image solve(const GradientField& g, double beta, double mu) const {
    const Spectrum gh = fft2(g.horizontal), gv = fft2(g.vertical);
    Spectrum out(b1.height, b1.width);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const Complex num = std::conj(kernel[i]) * b1[i] + std::conj(dh[i]) * (beta * gh[i] + mu * exemplar_h[i]) +
                          std::conj(dv[i]) * (beta * gv[i] + mu * exemplar_v[i]);
      const double den = std::norm(kernel[i]) + (beta + mu) * (std::norm(dh[i]) + std::norm(dv[i])) + 1e-12;
      out[i] = num / den;
    }
    return ifft2_image(out);
  }
};

inline Image latent_image_step(const Image& b1, const Image& i1, const Psf& kernel, const GradientField& g, double beta,
                               double mu) {
  if (!(beta >= 0.0) || !(mu >= 0.0)) throw InvalidInput("latent step: weights must be nonnegative");
  return LatentSystem(b1, i1, kernel).solve(g, beta, mu);
}

// Unprojected least-squares kernel on the full grid (bins with a zero
// denominator, e.g. DC in the gradient domain at ridge 0, stay zero):
//   argmin_P sum_d ||d(P*L) - d(B1)||^2 + ridge ||P||^2   (gradient domain), or
//   argmin_P ||P*L - B1||^2 + ridge ||P||^2               (intensity domain).
inline KernelCanvas kernel_least_squares(const Image& latent, const Image& b1, double ridge, bool gradient_domain) {
  require_same_shape(latent, b1, "kernel step");
  if (latent.channels != 1) throw InvalidInput("kernel step: expects single-channel images");
  const auto [lo, hi] = std::minmax_element(latent.data.begin(), latent.data.end());
  if (*lo == *hi) throw InvalidInput("kernel step: latent image is constant");
  if (!(ridge >= 0.0)) throw InvalidInput("kernel step: ridge must be >= 0");
  const int h = latent.height, w = latent.width;
  const Spectrum ls = fft2(latent), bs = fft2(b1);
  Spectrum ps(h, w);
  if (gradient_domain) {
    const Spectrum dh = horizontal_difference_transfer(h, w), dv = vertical_difference_transfer(h, w);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const double g2 = std::norm(dh[i]) + std::norm(dv[i]);
      const double den = g2 * std::norm(ls[i]) + ridge;
      if (den > 0.0) ps[i] = g2 * std::conj(ls[i]) * bs[i] / den;
    }
  } else {
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const double den = std::norm(ls[i]) + ridge;
      if (den > 0.0) ps[i] = std::conj(ls[i]) * bs[i] / den;
    }
  }
  return {h, w, ifft2(ps)};
}

inline Psf kernel_step(const Image& latent, const Image& b1, const HqsConfig& cfg, int side) {
  return project_kernel(kernel_least_squares(latent, b1, cfg.kernel_ridge, cfg.gradient_domain), side, cfg.kernel_prune);
}

// ||P*I - B1||^2, summed (not averaged) as in the estimation objective.
inline double data_term(const Image& latent, const Image& b1, const Psf& kernel) {
  const Image r = fft_convolve(latent, kernel);
  double acc = 0.0;
  for (std::size_t i = 0; i < r.data.size(); ++i) {
    const double d = r.data[i] - b1.data[i];
    acc += d * d;
  }
  return acc;
}

inline double squared_distance(const GradientField& a, const GradientField& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.horizontal.data.size(); ++i) {
    const double dh = a.horizontal.data[i] - b.horizontal.data[i];
    const double dv = a.vertical.data[i] - b.vertical.data[i];
    acc += dh * dh + dv * dv;
  }
  return acc;
}

// Beta-augmented surrogate minimized block-wise by the g- and I_l-steps:
//   ||P*I - B1||^2 + mu||grad I - grad I1||^2 + beta||grad I - g||^2 + lambda0 ||g||_0
inline double hqs_surrogate(const Image& latent, const GradientField& g, const Image& b1, const Image& i1,
                            const Psf& kernel, double beta, const HqsConfig& cfg) {
  const GradientField gl = gradient(latent);
  return data_term(latent, b1, kernel) + cfg.mu_exemplar * squared_distance(gl, gradient(i1)) +
         beta * squared_distance(gl, g) + cfg.lambda0 * static_cast<double>(nonzero_sites(g));
}

struct TraceRow {
  int outer_iter = 0;
  int beta_rounds = 0;
  double objective = 0.0;  // data + lambda0 * l0_count + mu * exemplar
  double data_term = 0.0;
  std::size_t l0_count = 0;  // nonzero (h, v) sites of the auxiliary gradient
};

struct LatentState {
  Image latent;
  GradientField aux_grad;
  Psf kernel;
  double beta = 0.0;
  std::vector<TraceRow> trace;
};

// Kernel used to seed the alternation: the direct deconvolution, or a
// centred delta if that fails or comes out nearly flat.
inline Psf initial_kernel(const Image& b1, const Image& i1, int side, double eps) {
  try {
    Psf k = fft_deconv(b1, i1, eps, side);
    if (kernel_similarity(k, Psf::uniform(side)) > 0.99) return Psf::delta(side);
    return k;
  } catch (const InvalidInput&) {
    return Psf::delta(side);
  }
}

// Alternating minimization of
//   ||P*I_l - B1||^2 + lambda0 ||grad I_l||_0 + mu ||grad I_l - grad I1||^2
// over (P, I_l), with the network's sharp output I1 as the exemplar. The l0
// term is handled by half-quadratic splitting with a doubling beta schedule.
struct EstimateResult {
  Psf kernel;
  LatentState state;
};

inline EstimateResult estimate_psf_exemplar(const Image& b1_in, const Image& i1_in, int side, const HqsConfig& cfg) {
  cfg.validate();
  require_same_shape(b1_in, i1_in, "estimate_psf_exemplar");
  if (side < 1 || side % 2 == 0) throw InvalidInput("estimate: side must be odd");
  if (side > std::min(b1_in.height, b1_in.width)) throw InvalidInput("estimate: side exceeds the image");
  const Image b1 = luminance(b1_in), i1 = luminance(i1_in);
  const GradientField exemplar_grad = gradient(i1);

  LatentState st;
  st.kernel = initial_kernel(b1, i1, side, cfg.epsilon_wiener);
  st.latent = i1;
  st.aux_grad = gradient(i1);
  for (int outer = 0; outer < cfg.outer_iters; ++outer) {
    const LatentSystem system(b1, i1, st.kernel);
    int rounds = 0;
    for (st.beta = cfg.beta0; st.beta <= cfg.beta_max; st.beta *= cfg.beta_growth) {
      st.aux_grad = latent_g_step(gradient(st.latent), cfg.lambda0, st.beta);
      st.latent = system.solve(st.aux_grad, st.beta, cfg.mu_exemplar);
      ++rounds;
    }
    st.kernel = kernel_step(st.latent, b1, cfg, side);

    TraceRow row;
    row.outer_iter = outer + 1;
    row.beta_rounds = rounds;
    row.data_term = data_term(st.latent, b1, st.kernel);
    row.l0_count = nonzero_sites(st.aux_grad);
    row.objective = row.data_term + cfg.lambda0 * static_cast<double>(row.l0_count) +
                    cfg.mu_exemplar * squared_distance(gradient(st.latent), exemplar_grad);
    st.trace.push_back(row);
  }
  return {st.kernel, std::move(st)};
}

}  // namespace nidf::psf
