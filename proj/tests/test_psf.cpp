#include <gtest/gtest.h>

#include "checks.hpp"

using namespace nidf;
using namespace nidf::psf;
using namespace nidf::testing;

namespace {

Image flipped_kernel_corr(const Image& img, const Psf& k) {
  // K^T r: correlation with the kernel, i.e. convolution with the flipped kernel.
  std::vector<double> flipped(k.weights().rbegin(), k.weights().rend());
  return convolve(img, Psf::normalized(k.side(), flipped), BoundaryMode::circular);
}

double quadratic_surrogate(const Image& latent, const GradientField& g, const Image& b1, const Image& i1,
                           const Psf& k, double beta, double mu) {
  const auto gl = gradient(latent);
  return data_term(latent, b1, k) + mu * squared_distance(gl, gradient(i1)) + beta * squared_distance(gl, g);
}

}  // namespace

TEST(FftDeconv, ExactOnCircularNoiseFreePair) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto f = psf_fixture(seed);
    const Psf est = fft_deconv(f.blurred, f.sharp, 0.0, f.kernel.side());
    EXPECT_GE(kernel_similarity(est, f.kernel), 0.999) << seed;
  }
}

TEST(FftDeconv, IdenticalPairGivesDelta) {
  const Image img = textured(32, 5);
  const Psf est = fft_deconv(img, img, 0.0, 7);
  EXPECT_NEAR(est.at(3, 3), 1.0, 1e-9);
  // With a spectral floor the ratio is only nearly flat.
  EXPECT_GE(kernel_similarity(fft_deconv(img, img, 1e-3, 7), Psf::delta(7)), 0.9999);
}

TEST(FftDeconv, RejectsZeroSharpAndMismatch) {
  const Image z(16, 16, 1);
  EXPECT_THROW(fft_deconv(textured(16, 1), z, 1e-3, 5), InvalidInput);
  EXPECT_THROW(fft_deconv(textured(16, 1), textured(20, 1), 1e-3, 5), InvalidInput);
  EXPECT_THROW(fft_deconv(textured(16, 1), textured(16, 2), -1.0, 5), InvalidInput);
}

TEST(FftDeconv, ColourReducedToLuminance) {
  const auto f = psf_fixture();
  Image b(64, 64, 3), i(64, 64, 3);
  for (int c = 0; c < 3; ++c) {
    std::copy(f.blurred.data.begin(), f.blurred.data.end(), b.plane(c).begin());
    std::copy(f.sharp.data.begin(), f.sharp.data.end(), i.plane(c).begin());
  }
  EXPECT_GE(kernel_similarity(fft_deconv(b, i, 0.0, 9), f.kernel), 0.999);
}

TEST(GStep, ThresholdExamples) {
  GradientField g{Image(1, 2, 1), Image(1, 2, 1)};
  g.horizontal.data = {std::sqrt(0.001), std::sqrt(0.01)};
  const auto out = latent_g_step(g, 0.002, 1.0);
  EXPECT_EQ(out.horizontal.data[0], 0.0);
  EXPECT_EQ(out.horizontal.data[1], std::sqrt(0.01));
  EXPECT_EQ(nonzero_sites(out), 1u);
  EXPECT_THROW(latent_g_step(g, 0.002, 0.0), InvalidInput);
}

TEST(GStep, MatchesTwoCaseOracle) {
  const auto g = random_field(20, 20, 3, 0.2);
  const double lambda0 = 0.002, beta = 0.7;
  const auto out = latent_g_step(g, lambda0, beta);
  for (std::size_t i = 0; i < g.horizontal.data.size(); ++i) {
    const double h = g.horizontal.data[i], v = g.vertical.data[i];
    // Keep costs lambda0; zeroing costs beta * |grad|^2.
    const bool keep = lambda0 <= beta * (h * h + v * v);
    EXPECT_EQ(out.horizontal.data[i], keep ? h : 0.0);
    EXPECT_EQ(out.vertical.data[i], keep ? v : 0.0);
  }
}

TEST(LatentStep, LargeBetaWithExactGradientsReturnsB1) {
  const Image b1 = textured(32, 7);
  const Image out = latent_image_step(b1, b1, Psf::delta(5), gradient(b1), 1e8, 0.0);
  EXPECT_LT(max_abs_diff(out, b1), 1e-6);
}

TEST(LatentStep, ZeroInputsGiveZero) {
  const Image z(16, 16, 1);
  const Image out = latent_image_step(z, z, random_psf(5, 1), GradientField{z, z}, 3.0, 0.001);
  for (double v : out.data) EXPECT_EQ(v, 0.0);
}

TEST(LatentStep, SatisfiesNormalEquationsAndBeatsRandomProbes) {
  Rng rng(17);
  std::normal_distribution<double> gauss(0.0, 1e-2);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Image b1 = random_image(16, 16, seed * 10 + 1), i1 = random_image(16, 16, seed * 10 + 2);
    const Psf k = random_psf(5, seed * 10 + 3);
    const auto g = random_field(16, 16, seed * 10 + 4, 0.3);
    const double beta = 0.5 + static_cast<double>(seed), mu = 0.001;
    const Image x = latent_image_step(b1, i1, k, g, beta, mu);

    // (K^T K + (beta + mu) D^T D) x = K^T b1 + D^T (beta g + mu D i1)
    const Image lhs = axpy(flipped_kernel_corr(fft_convolve(x, k), k), beta + mu, gradient_adjoint(gradient(x)));
    const auto di1 = gradient(i1);
    GradientField target{g.horizontal, g.vertical};
    for (std::size_t i = 0; i < target.horizontal.data.size(); ++i) {
      target.horizontal.data[i] = beta * g.horizontal.data[i] + mu * di1.horizontal.data[i];
      target.vertical.data[i] = beta * g.vertical.data[i] + mu * di1.vertical.data[i];
    }
    const Image rhs = axpy(flipped_kernel_corr(b1, k), 1.0, gradient_adjoint(target));
    EXPECT_LE(norm2(axpy(lhs, -1.0, rhs)) / norm2(rhs), 1e-8) << seed;

    const double best = quadratic_surrogate(x, g, b1, i1, k, beta, mu);
    for (int probe = 0; probe < 100; ++probe) {
      Image y = x;
      for (auto& v : y.data) v += gauss(rng);
      EXPECT_LE(best, quadratic_surrogate(y, g, b1, i1, k, beta, mu) + 1e-12);
    }
  }
}

TEST(KernelStep, RidgeZeroRecoversKernel) {
  const auto f = psf_fixture();
  const auto canvas = kernel_least_squares(f.sharp, f.blurred, 0.0, true);
  EXPECT_GE(kernel_similarity(project_kernel(canvas, 9, 0.05), f.kernel), 0.999);
  const auto intensity = kernel_least_squares(f.sharp, f.blurred, 0.0, false);
  EXPECT_GE(kernel_similarity(project_kernel(intensity, 9, 0.05), f.kernel), 0.999);
}

TEST(KernelStep, IdenticalPairGivesDelta) {
  const Image img = textured(32, 9);
  HqsConfig cfg;
  cfg.kernel_ridge = 0.0;
  const Psf k = kernel_step(img, img, cfg, 7);
  EXPECT_EQ(k, Psf::delta(7));
}

TEST(KernelStep, RejectsConstantLatent) {
  Image flat(16, 16, 1);
  std::fill(flat.data.begin(), flat.data.end(), 0.3);
  EXPECT_THROW(kernel_step(flat, textured(16, 1), HqsConfig{}, 5), InvalidInput);
  EXPECT_THROW(kernel_least_squares(textured(16, 1), textured(16, 2), -1.0, true), InvalidInput);
}

TEST(KernelStep, NormalEquationResidual) {
  for (bool gradient_domain : {true, false})
    for (std::uint64_t seed = 0; seed < 3; ++seed)
      EXPECT_LE(kernel_normal_residual(seed, gradient_domain), 1e-8) << gradient_domain << " " << seed;
}

TEST(KernelStep, ProjectionProducesValidKernel) {
  KernelCanvas c{9, 9, std::vector<double>(81, 0.0)};
  c.values[0] = 1.0;
  c.values[1] = -0.5;     // negative, dropped
  c.values[9] = 0.03;     // below 5% of the peak, pruned
  c.values[9 * 8] = 0.5;  // wraps to (-1, 0)
  const Psf k = project_kernel(c, 3, 0.05);
  EXPECT_NEAR(k.at(1, 1), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(k.at(0, 1), 1.0 / 3.0, 1e-12);
  EXPECT_THROW(project_kernel(c, 4, 0.05), InvalidInput);
  EXPECT_THROW(project_kernel(c, 11, 0.05), InvalidInput);
  EXPECT_THROW(project_kernel(KernelCanvas{3, 3, std::vector<double>(9, -1.0)}, 3, 0.0), InvalidInput);
}

TEST(Hqs, SurrogateNonIncreasingAcrossStepPairs) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) EXPECT_LE(hqs_worst_increase(seed), 1e-9) << seed;
}

TEST(Hqs, ConfigValidation) {
  HqsConfig c;
  EXPECT_NO_THROW(c.validate());
  for (auto mutate : std::vector<std::function<void(HqsConfig&)>>{
           [](HqsConfig& h) { h.lambda0 = 0; }, [](HqsConfig& h) { h.kernel_ridge = -1; },
           [](HqsConfig& h) { h.beta0 = 1e6; }, [](HqsConfig& h) { h.beta_growth = 1.0; },
           [](HqsConfig& h) { h.outer_iters = 0; }, [](HqsConfig& h) { h.kernel_prune = 0.5; }}) {
    HqsConfig bad;
    mutate(bad);
    EXPECT_THROW(bad.validate(), InvalidInput);
  }
}

TEST(Hqs, NoiseFreeFixtureRecoversKernel) {
  const auto f = psf_fixture();
  const auto r = estimate_psf_exemplar(f.blurred, f.sharp, f.kernel.side(), HqsConfig{});
  EXPECT_GE(kernel_similarity(r.kernel, f.kernel), 0.95);
}

TEST(Hqs, BeatsDirectDeconvolutionUnderNoise) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto f = psf_fixture(seed);
    HqsConfig cfg;
    const double ks_fft = kernel_similarity(fft_deconv(f.noisy, f.sharp, cfg.epsilon_wiener, 9), f.kernel);
    const double ks_hqs = kernel_similarity(estimate_psf_exemplar(f.noisy, f.sharp, 9, cfg).kernel, f.kernel);
    EXPECT_GE(ks_hqs, ks_fft) << seed;
  }
}

TEST(Hqs, TraceAndStateInvariants) {
  const auto f = psf_fixture(1);
  HqsConfig cfg;
  cfg.outer_iters = 3;
  const auto r = estimate_psf_exemplar(f.noisy, f.sharp, 9, cfg);
  ASSERT_EQ(r.state.trace.size(), 3u);
  for (const auto& row : r.state.trace) {
    EXPECT_EQ(row.beta_rounds, 14);  // 10 * 2^13 <= 1e5 < 10 * 2^14
    EXPECT_TRUE(std::isfinite(row.objective));
    EXPECT_GE(row.objective, row.data_term);
  }
  EXPECT_EQ(r.state.kernel, r.kernel);
  EXPECT_EQ(r.kernel.side(), 9);
  EXPECT_EQ(r.state.trace.back().l0_count, nonzero_sites(r.state.aux_grad));
}

TEST(Hqs, IdenticalPairGivesDeltaAndVanishingDataTerm) {
  const Image img = textured(32, 11);
  const auto r = estimate_psf_exemplar(img, img, 7, HqsConfig{});
  EXPECT_GE(kernel_similarity(r.kernel, Psf::delta(7)), 0.99);
  double energy = 0.0;
  for (double v : img.data) energy += v * v;
  for (const auto& row : r.state.trace) EXPECT_LT(row.data_term, 1e-3 * energy);
}

TEST(Hqs, Deterministic) {
  const auto f = psf_fixture(2);
  const auto a = estimate_psf_exemplar(f.noisy, f.sharp, 9, HqsConfig{});
  const auto b = estimate_psf_exemplar(f.noisy, f.sharp, 9, HqsConfig{});
  EXPECT_EQ(a.kernel, b.kernel);
  EXPECT_EQ(a.state.latent.data, b.state.latent.data);
  ASSERT_EQ(a.state.trace.size(), b.state.trace.size());
  for (std::size_t i = 0; i < a.state.trace.size(); ++i) EXPECT_EQ(a.state.trace[i].objective, b.state.trace[i].objective);
}

TEST(Hqs, RejectsBadSide) {
  const auto f = psf_fixture();
  EXPECT_THROW(estimate_psf_exemplar(f.blurred, f.sharp, 8, HqsConfig{}), InvalidInput);
  EXPECT_THROW(estimate_psf_exemplar(f.blurred, f.sharp, 65, HqsConfig{}), InvalidInput);
}
