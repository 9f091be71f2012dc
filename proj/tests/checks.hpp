#pragma once

// Numeric checks shared by the unit tests and the acceptance binary. Each
// returns a worst-case error so callers can print it as well as assert it.

#include <functional>

#include "test_util.hpp"

namespace nidf::testing {

// ---- finite differences ------------------------------------------------

inline constexpr double kFdStep = 1e-5;

// |a - fd| / max(|a|, |fd|) over entries with |fd| > 1e-8.
inline double worst_relative_error(const std::vector<double>& analytic, const std::vector<double>& fd) {
  double worst = 0.0;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    if (std::abs(fd[i]) <= 1e-8) continue;
    worst = std::max(worst, std::abs(analytic[i] - fd[i]) / std::max(std::abs(analytic[i]), std::abs(fd[i])));
  }
  return worst;
}

// Central differences of f over every coordinate of x.
inline std::vector<double> central_differences(std::vector<double> x, const std::function<double(const std::vector<double>&)>& f) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + kFdStep;
    const double up = f(x);
    x[i] = keep - kFdStep;
    const double dn = f(x);
    x[i] = keep;
    out[i] = (up - dn) / (2 * kFdStep);
  }
  return out;
}

inline net::Tensor<double> random_tensor(int c, int h, int w, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  net::Tensor<double> t(c, h, w);
  for (auto& v : t.data) v = u(rng);
  return t;
}

inline double dot(const net::Tensor<double>& a, const net::Tensor<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

inline net::NetParams<double> randomized_params(const net::NetArch& arch, std::uint64_t seed) {
  auto p = net::init_params<double>(arch, seed);
  Rng rng(seed + 1);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (auto& l : p.layers)
    for (auto& b : l.bias) b = u(rng);
  return p;
}

// Conv layer under L = <r, conv(x)>: worst error over weights, biases and input.
inline double conv_gradient_error(int stride, bool activated, std::uint64_t seed) {
  net::Conv3x3<double> layer(2, 3, stride, activated);
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 0.5);
  for (auto& w : layer.weight) w = g(rng);
  for (auto& b : layer.bias) b = g(rng);
  const auto in = random_tensor(2, 6, 6, seed + 1);
  const auto out = net::conv_forward(layer, in);
  const auto r = random_tensor(out.channels, out.height, out.width, seed + 2);

  net::ConvGrad<double> grad{std::vector<double>(layer.weight.size()), std::vector<double>(layer.bias.size())};
  const auto d_in = net::conv_backward(layer, in, out, r, grad);

  const auto fd_w = central_differences(layer.weight, [&](const std::vector<double>& w) {
    auto l = layer;
    l.weight = w;
    return dot(net::conv_forward(l, in), r);
  });
  const auto fd_b = central_differences(layer.bias, [&](const std::vector<double>& b) {
    auto l = layer;
    l.bias = b;
    return dot(net::conv_forward(l, in), r);
  });
  const auto fd_x = central_differences(in.data, [&](const std::vector<double>& x) {
    auto t = in;
    t.data = x;
    return dot(net::conv_forward(layer, t), r);
  });
  return std::max({worst_relative_error(grad.weight, fd_w), worst_relative_error(grad.bias, fd_b),
                   worst_relative_error(d_in.data, fd_x)});
}

// Upsample and channel concat under L = <r, op(x)>.
inline double reshape_gradient_error(std::uint64_t seed) {
  const auto x = random_tensor(2, 3, 4, seed);
  const auto r_up = random_tensor(2, 6, 8, seed + 1);
  const auto fd_up = central_differences(x.data, [&](const std::vector<double>& v) {
    auto t = x;
    t.data = v;
    return dot(net::upsample2x(t), r_up);
  });
  double worst = worst_relative_error(net::upsample2x_backward(r_up).data, fd_up);

  const auto y = random_tensor(3, 3, 4, seed + 2);
  const auto r_cat = random_tensor(5, 3, 4, seed + 3);
  const auto [dx, dy] = net::split_channels(r_cat, 2);
  const auto fd_x = central_differences(x.data, [&](const std::vector<double>& v) {
    auto t = x;
    t.data = v;
    return dot(net::concat_channels(t, y), r_cat);
  });
  const auto fd_y = central_differences(y.data, [&](const std::vector<double>& v) {
    auto t = y;
    t.data = v;
    return dot(net::concat_channels(x, t), r_cat);
  });
  worst = std::max(worst, worst_relative_error(dx.data, fd_x));
  return std::max(worst, worst_relative_error(dy.data, fd_y));
}

// Full Net1 -> Net2 cascade, every parameter of both nets, plus d(loss)/d(noisy).
inline double cascade_gradient_error(net::Stage stage, const net::NetArch& arch, int size, std::uint64_t seed) {
  const auto net1 = randomized_params(arch, seed);
  const auto net2 = randomized_params(arch, seed + 10);
  const auto noisy = net::to_tensor<double>(random_image(size, size, seed + 20, arch.image_channels));
  const auto blurry = net::to_tensor<double>(random_image(size, size, seed + 21, arch.image_channels));
  const auto sharp = net::to_tensor<double>(random_image(size, size, seed + 22, arch.image_channels));

  auto loss = [&](const net::NetParams<double>& a, const net::NetParams<double>& b) {
    return net::cascade_gradients(stage, a, b, arch, noisy, blurry, sharp).loss;
  };
  const auto g = net::cascade_gradients(stage, net1, net2, arch, noisy, blurry, sharp);
  const auto fd1 = central_differences(net1.flatten(), [&](const std::vector<double>& v) {
    auto p = net1;
    p.assign(v);
    return loss(p, net2);
  });
  const auto fd2 = central_differences(net2.flatten(), [&](const std::vector<double>& v) {
    auto p = net2;
    p.assign(v);
    return loss(net1, p);
  });
  return std::max(worst_relative_error(g.net1.flatten(), fd1), worst_relative_error(g.net2.flatten(), fd2));
}

// ---- HQS ---------------------------------------------------------------

inline double norm2(const Image& a) {
  double s = 0.0;
  for (double v : a.data) s += v * v;
  return std::sqrt(s);
}

inline Image axpy(const Image& a, double s, const Image& b) {
  Image c = a;
  for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] += s * b.data[i];
  return c;
}

inline GradientField random_field(int h, int w, std::uint64_t seed, double scale) {
  GradientField g{random_image(h, w, seed), random_image(h, w, seed + 1)};
  for (auto* img : {&g.horizontal, &g.vertical})
    for (auto& v : img->data) v = (v - 0.5) * scale;
  return g;
}

// c = a (*) b on the full periodic grid, by brute force.
inline Image circular_conv(const Image& a, const Image& b) {
  const int h = a.height, w = a.width;
  Image c(h, w, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int u = 0; u < h; ++u)
        for (int v = 0; v < w; ++v) acc += a.at(u, v) * b.at((y - u + h) % h, (x - v + w) % w);
      c.at(y, x) = acc;
    }
  return c;
}

// Adjoint of p -> a (*) p.
inline Image circular_corr(const Image& a, const Image& r) {
  const int h = a.height, w = a.width;
  Image c(h, w, 1);
  for (int u = 0; u < h; ++u)
    for (int v = 0; v < w; ++v) {
      double acc = 0.0;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) acc += a.at((y - u + h) % h, (x - v + w) % w) * r.at(y, x);
      c.at(u, v) = acc;
    }
  return c;
}

// Largest increase of the beta-augmented surrogate across one g-step or one
// latent step, over a doubling beta sweep on a random instance.
inline double hqs_worst_increase(std::uint64_t seed) {
  psf::HqsConfig cfg;
  const Image b1 = random_image(16, 16, seed * 5 + 100), i1 = random_image(16, 16, seed * 5 + 101);
  const Psf k = random_psf(5, seed * 5 + 102);
  Image latent = random_image(16, 16, seed * 5 + 103);
  GradientField g = random_field(16, 16, seed * 5 + 104, 0.5);
  const psf::LatentSystem system(b1, i1, k);
  double worst = -std::numeric_limits<double>::infinity();
  for (double beta = 0.01; beta <= 100.0; beta *= 2.0) {
    const double s0 = psf::hqs_surrogate(latent, g, b1, i1, k, beta, cfg);
    g = psf::latent_g_step(gradient(latent), cfg.lambda0, beta);
    const double s1 = psf::hqs_surrogate(latent, g, b1, i1, k, beta, cfg);
    latent = system.solve(g, beta, cfg.mu_exemplar);
    const double s2 = psf::hqs_surrogate(latent, g, b1, i1, k, beta, cfg);
    worst = std::max({worst, s1 - s0, s2 - s1});
  }
  return worst;
}

// Relative residual of the kernel normal equations, unprojected solution.
inline double kernel_normal_residual(std::uint64_t seed, bool gradient_domain, double ridge = 1e-3) {
  const Image latent = random_image(12, 12, seed + 40), b1 = random_image(12, 12, seed + 50);
  const auto canvas = psf::kernel_least_squares(latent, b1, ridge, gradient_domain);
  Image p(canvas.height, canvas.width, 1);
  p.data = canvas.values;
  Image lhs(12, 12, 1), rhs(12, 12, 1);
  if (gradient_domain) {
    const auto dl = gradient(latent), db = gradient(b1);
    for (const auto& [a, b] : {std::pair{&dl.horizontal, &db.horizontal}, std::pair{&dl.vertical, &db.vertical}}) {
      lhs = axpy(lhs, 1.0, circular_corr(*a, circular_conv(*a, p)));
      rhs = axpy(rhs, 1.0, circular_corr(*a, *b));
    }
  } else {
    lhs = circular_corr(latent, circular_conv(latent, p));
    rhs = circular_corr(latent, b1);
  }
  lhs = axpy(lhs, ridge, p);
  return norm2(axpy(lhs, -1.0, rhs)) / norm2(rhs);
}

// ---- CLI ---------------------------------------------------------------

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

inline CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "nidf");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = pipeline::cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// scenes -> synth -> train x3 -> infer -> estimate-psf -> eval under `root`.
// Returns the first failing command line, or an empty string.
inline std::string run_pipeline(const fs::path& root) {
  const auto p = [&](const char* name) { return (root / name).string(); };
  const std::vector<std::string> small{"--set", "arch.base_channels=4", "--epochs", "2", "--batch", "2", "--seed", "3"};
  auto with_small = [&](std::vector<std::string> args) {
    args.insert(args.end(), small.begin(), small.end());
    return args;
  };
  const std::vector<std::vector<std::string>> steps = {
      {"scenes", "--out-dir", p("sharp"), "--count", "4", "--size", "32", "--seed", "1"},
      {"synth", "--sharp-dir", p("sharp"), "--out-dir", p("data"), "--count", "4", "--size", "16", "--seed", "2"},
      with_small({"train", "--manifest", p("data/manifest.csv"), "--stage", "pretrain-denoise", "--lr", "1e-3", "--out",
                  p("n1.ckpt")}),
      with_small({"train", "--manifest", p("data/manifest.csv"), "--stage", "pretrain-deblur", "--lr", "1e-3", "--out",
                  p("n2.ckpt")}),
      with_small({"train", "--manifest", p("data/manifest.csv"), "--stage", "joint", "--init", p("n1.ckpt"), "--init2",
                  p("n2.ckpt"), "--out", p("joint.ckpt")}),
      {"infer", "--ckpt", p("joint.ckpt"), "--in", p("data/noisy/s000000.png"), "--out-denoised", p("b1.png"),
       "--out-sharp", p("i1.png")},
      {"estimate-psf", "--denoised", p("b1.png"), "--sharp", p("i1.png"), "--side", "7", "--out", p("psf.txt"),
       "--trace", p("trace.csv"), "--set", "hqs.outer_iters=2", "--dump-config", p("hqs.json")},
      {"estimate-psf", "--denoised", p("b1.png"), "--sharp", p("i1.png"), "--side", "7", "--method", "fft", "--out",
       p("psf_fft.txt")},
      {"eval", "--manifest", p("data/manifest.csv"), "--ckpt", p("joint.ckpt"), "--out-dir", p("report"),
       "--estimate-psf", "--method", "fft", "--threads", "2"},
  };
  for (const auto& s : steps) {
    const auto r = cli(s);
    if (r.code != 0) {
      std::string line;
      for (const auto& a : s) line += a + " ";
      return line + "-> exit " + std::to_string(r.code) + ": " + r.err;
    }
  }
  return {};
}

inline const std::vector<std::string>& pipeline_artifacts() {
  static const std::vector<std::string> files = {
      "data/manifest.csv", "data/manifest.json", "data/noisy/s000003.png", "data/psf/s000002.txt",
      "n1.ckpt",           "n2.ckpt",            "joint.ckpt",             "b1.png",
      "i1.png",            "psf.txt",            "psf_fft.txt",            "trace.csv",
      "hqs.json",          "report/report.csv",  "report/report.txt"};
  return files;
}

}  // namespace nidf::testing
