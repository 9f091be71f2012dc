#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nidf/pipeline/config.hpp"
#include "nidf/pipeline/evaluate.hpp"
#include "nidf/synthesis/scenes.hpp"

namespace nidf::pipeline {

namespace fs = std::filesystem;

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;  // bad flags, bad config, bad input files
inline constexpr int kExitRuntime = 2;  // anything that failed while running

namespace detail {

// --config / --set / --dump-config, shared by every subcommand.
struct ConfigFlags {
  std::string path;
  std::vector<std::string> overrides;
  std::string dump;

  void attach(CLI::App* app) {
    app->add_option("--config", path, "JSON config file; missing keys keep their defaults");
    app->add_option("--set", overrides, "override one config scalar, e.g. --set hqs.lambda0=0.004")
        ->type_name("KEY=VALUE")
        ->allow_extra_args(false);
    app->add_option("--dump-config", dump, "write the effective config as JSON to this file");
  }

  [[nodiscard]] RunConfig resolve() const {
    RunConfig cfg = path.empty() ? RunConfig{} : load_config(path);
    for (const auto& o : overrides) cfg = apply_override(cfg, o);
    return cfg;
  }
};

inline void dump_if_requested(const ConfigFlags& flags, const RunConfig& cfg) {
  if (flags.dump.empty()) return;
  std::ofstream out(flags.dump, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + flags.dump);
  out << dump_config(cfg);
}

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline void write_trace(const fs::path& path, const std::vector<psf::TraceRow>& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "outer_iter,beta_rounds,objective,data_term,l0_count\n";
  for (const auto& r : trace)
    out << r.outer_iter << ',' << r.beta_rounds << ',' << fmt("%.17g", r.objective) << ','
        << fmt("%.17g", r.data_term) << ',' << r.l0_count << '\n';
}

}  // namespace detail

// Single entry point of the nidf executable.
inline int cli_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Blind deblurring of noisy images: synthesis, training, inference, kernel estimation, evaluation",
               "nidf"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "show help for every subcommand");

  struct {
    detail::ConfigFlags cfg;
    std::string sharp_dir, out_dir, manifest, stage, init, init2, out, ckpt, in, out_denoised, out_sharp, denoised,
        sharp, method, trace;
    int count = 0, size = 0, epochs = -1, batch = 0, side = 0, threads = 0;
    double lr = 0.0;
    std::uint64_t seed = 0;
    bool estimate_psf = false;
  } a;

  auto* scenes = app.add_subcommand("scenes", "write procedural sharp test images (a stand-in photo set)");
  scenes->add_option("--out-dir", a.out_dir, "directory to write scene_XXXX.png into")->required();
  scenes->add_option("--count", a.count, "number of images")->required()->check(CLI::PositiveNumber);
  scenes->add_option("--size", a.size, "side length in pixels")->default_val(64)->check(CLI::Range(16, 4096));
  scenes->add_option("--seed", a.seed, "random seed")->required();

  auto* synth = app.add_subcommand("synth", "build a degraded dataset (PSF, blur, noise) from sharp PNGs");
  synth->add_option("--sharp-dir", a.sharp_dir, "directory of sharp PNG images")->required();
  synth->add_option("--out-dir", a.out_dir, "output dataset directory")->required();
  synth->add_option("--count", a.count, "number of samples")->required()->check(CLI::PositiveNumber);
  synth->add_option("--size", a.size, "training image size (overrides synth.size)")->check(CLI::Range(16, 4096));
  synth->add_option("--seed", a.seed, "random seed")->required();
  a.cfg.attach(synth);

  auto* train = app.add_subcommand("train", "train one stage of the denoise/deblur cascade");
  train->add_option("--manifest", a.manifest, "dataset manifest.csv")->required();
  train->add_option("--stage", a.stage, "pretrain-denoise | pretrain-deblur | joint");
  train->add_option("--epochs", a.epochs, "epochs (overrides train.epochs)")->check(CLI::NonNegativeNumber);
  train->add_option("--lr", a.lr, "learning rate (overrides train.learning_rate)")->check(CLI::PositiveNumber);
  train->add_option("--batch", a.batch, "batch size (overrides train.batch_size)")->check(CLI::PositiveNumber);
  train->add_option("--threads", a.threads, "worker threads (overrides train.threads)")->check(CLI::PositiveNumber);
  train->add_option("--seed", a.seed, "random seed")->required();
  train->add_option("--init", a.init, "starting checkpoint; for joint, supplies the denoiser");
  train->add_option("--init2", a.init2, "joint stage only: checkpoint supplying the deblurrer");
  train->add_option("--out", a.out, "checkpoint to write")->required();
  a.cfg.attach(train);

  auto* infer = app.add_subcommand("infer", "run the cascade on one noisy PNG");
  infer->add_option("--ckpt", a.ckpt, "checkpoint")->required();
  infer->add_option("--in", a.in, "noisy input PNG")->required();
  infer->add_option("--out-denoised", a.out_denoised, "denoised (still blurry) output PNG");
  infer->add_option("--out-sharp", a.out_sharp, "deblurred output PNG");

  auto* estimate = app.add_subcommand("estimate-psf", "estimate the blur kernel from a denoised/sharp pair");
  estimate->add_option("--denoised", a.denoised, "denoised blurry image B1 (PNG)")->required();
  estimate->add_option("--sharp", a.sharp, "sharp estimate I1 (PNG)")->required();
  estimate->add_option("--side", a.side, "odd kernel side length")->required()->check(CLI::PositiveNumber);
  estimate->add_option("--method", a.method, "fft | exemplar")->default_val("exemplar");
  estimate->add_option("--out", a.out, "PSF text file to write")->required();
  estimate->add_option("--trace", a.trace, "per-iteration CSV (exemplar method)");
  estimate->add_option("--seed", a.seed, "accepted for uniformity; estimation is deterministic");
  a.cfg.attach(estimate);

  auto* eval = app.add_subcommand("eval", "score a checkpoint on a dataset and write report.csv/report.txt");
  eval->add_option("--manifest", a.manifest, "dataset manifest.csv")->required();
  eval->add_option("--ckpt", a.ckpt, "checkpoint")->required();
  eval->add_option("--out-dir", a.out_dir, "report directory")->required();
  eval->add_flag("--estimate-psf", a.estimate_psf, "also estimate kernels and report kernel similarity");
  eval->add_option("--method", a.method, "kernel estimator for --estimate-psf: fft | exemplar");
  eval->add_option("--threads", a.threads, "worker threads (overrides eval.threads)")->check(CLI::PositiveNumber);
  eval->add_option("--seed", a.seed, "accepted for uniformity; evaluation is deterministic");
  a.cfg.attach(eval);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (scenes->parsed()) {
      fs::create_directories(a.out_dir);
      for (int i = 0; i < a.count; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "scene_%04d.png", i);
        write_png(fs::path(a.out_dir) / name,
                  synthesis::procedural_scene(a.size, a.size, derive_seed(a.seed, static_cast<std::uint64_t>(i))));
      }
      out << "wrote " << a.count << " scenes to " << a.out_dir << '\n';
      return kExitOk;
    }

    if (synth->parsed()) {
      RunConfig cfg = a.cfg.resolve();
      if (*synth->get_option("--size")) cfg.synth.size = a.size;
      cfg.seed = cfg.train.seed = a.seed;
      cfg.validate();
      detail::dump_if_requested(a.cfg, cfg);
      const auto m = synthesis::build_dataset(a.sharp_dir, a.out_dir, a.count, a.seed, cfg.synth, err);
      out << "wrote " << m.rows.size() << " samples to " << a.out_dir << '\n';
      return kExitOk;
    }

    if (train->parsed()) {
      RunConfig cfg = a.cfg.resolve();
      if (*train->get_option("--stage")) cfg.train.stage = net::parse_stage(a.stage);
      if (*train->get_option("--epochs")) cfg.train.epochs = a.epochs;
      if (*train->get_option("--lr")) cfg.train.learning_rate = a.lr;
      if (*train->get_option("--batch")) cfg.train.batch_size = a.batch;
      if (*train->get_option("--threads")) cfg.train.threads = a.threads;
      cfg.seed = cfg.train.seed = a.seed;
      std::optional<net::Checkpoint> init, init2;
      if (!a.init.empty()) init = net::load_checkpoint(a.init);
      if (!a.init2.empty()) init2 = net::load_checkpoint(a.init2);
      // A starting checkpoint fixes the architecture.
      if (init) cfg.arch = init->arch;
      cfg.validate();
      detail::dump_if_requested(a.cfg, cfg);

      const auto m = synthesis::read_manifest(a.manifest);
      std::vector<net::TrainingTriple> data;
      for (const auto& r : m.rows) {
        auto s = synthesis::load_sample(m, r, synthesis::NoiseSource::regenerate);
        data.push_back({std::move(s.noisy), std::move(s.blurry), std::move(s.sharp)});
      }
      net::TrainHooks hooks;
      hooks.on_epoch = [&](int epoch, double loss) {
        out << "epoch " << epoch << " loss " << detail::fmt("%.9g", loss) << '\n';
      };
      const auto ck = net::train(data, cfg.arch, cfg.train, init ? &*init : nullptr, init2 ? &*init2 : nullptr, hooks);
      net::save_checkpoint(a.out, ck);
      return kExitOk;
    }

    if (infer->parsed()) {
      if (a.out_denoised.empty() && a.out_sharp.empty())
        throw InvalidInput("infer: give --out-denoised and/or --out-sharp");
      const auto ck = net::load_checkpoint(a.ckpt);
      const auto r = net::infer(ck, read_png(a.in));
      if (!a.out_denoised.empty()) write_png(a.out_denoised, r.denoised);
      if (!a.out_sharp.empty()) write_png(a.out_sharp, r.sharp);
      return kExitOk;
    }

    if (estimate->parsed()) {
      const RunConfig cfg = a.cfg.resolve();
      detail::dump_if_requested(a.cfg, cfg);
      const PsfMethod method = parse_method(a.method);
      const Image b1 = read_png(a.denoised), i1 = read_png(a.sharp);
      std::vector<psf::TraceRow> trace;
      Psf k;
      if (method == PsfMethod::fft) {
        k = psf::fft_deconv(b1, i1, cfg.hqs.epsilon_wiener, a.side);
      } else {
        auto r = psf::estimate_psf_exemplar(b1, i1, a.side, cfg.hqs);
        k = std::move(r.kernel);
        trace = std::move(r.state.trace);
      }
      write_psf(a.out, k);
      if (!a.trace.empty()) detail::write_trace(a.trace, trace);
      return kExitOk;
    }

    if (eval->parsed()) {
      RunConfig cfg = a.cfg.resolve();
      if (a.estimate_psf) cfg.eval.estimate_psf = true;
      if (*eval->get_option("--method")) cfg.eval.psf_method = parse_method(a.method);
      if (*eval->get_option("--threads")) cfg.eval.threads = a.threads;
      cfg.validate();
      detail::dump_if_requested(a.cfg, cfg);
      const auto m = synthesis::read_manifest(a.manifest);
      const auto ck = net::load_checkpoint(a.ckpt);
      const auto rep = evaluate(m, ck, cfg);
      write_report(a.out_dir, rep);
      out << format_report_text(rep);
      return rep.pooled.count ? kExitOk : kExitRuntime;
    }
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitInvalid;
}

}  // namespace nidf::pipeline
