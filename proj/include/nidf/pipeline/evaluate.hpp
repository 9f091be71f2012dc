#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nidf/core/metrics.hpp"
#include "nidf/core/parallel.hpp"
#include "nidf/pipeline/config.hpp"

namespace nidf::pipeline {

struct EvalRow {
  std::string id;
  double sigma = 0.0;
  bool ok = false;
  std::string error;
  double psnr_noisy = 0.0;     // N vs I
  double psnr_denoised = 0.0;  // B1 vs B
  double psnr_sharp = 0.0;     // I1 vs I
  double ssim_sharp = 0.0;     // I1 vs I
  std::optional<double> ks;    // estimated kernel vs ground truth
};

struct EvalAggregate {
  std::size_t count = 0;
  double psnr_noisy = 0.0;
  double psnr_denoised = 0.0;
  double psnr_sharp = 0.0;
  double ssim_sharp = 0.0;
  std::size_t ks_count = 0;
  double ks = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;                  // ordered by id
  std::map<double, EvalAggregate> by_sigma;   // successful rows only
  EvalAggregate pooled;

  [[nodiscard]] std::size_t failed() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const EvalRow& r) { return !r.ok; }));
  }
};

inline EvalAggregate aggregate(const std::vector<const EvalRow*>& rows) {
  EvalAggregate a;
  for (const auto* r : rows) {
    ++a.count;
    a.psnr_noisy += r->psnr_noisy;
    a.psnr_denoised += r->psnr_denoised;
    a.psnr_sharp += r->psnr_sharp;
    a.ssim_sharp += r->ssim_sharp;
    if (r->ks) {
      ++a.ks_count;
      a.ks += *r->ks;
    }
  }
  if (a.count) {
    const double n = static_cast<double>(a.count);
    a.psnr_noisy /= n;
    a.psnr_denoised /= n;
    a.psnr_sharp /= n;
    a.ssim_sharp /= n;
  }
  if (a.ks_count) a.ks /= static_cast<double>(a.ks_count);
  return a;
}

inline Psf estimate_kernel(const Image& b1, const Image& i1, int side, PsfMethod method, const psf::HqsConfig& cfg) {
  if (method == PsfMethod::fft) return psf::fft_deconv(b1, i1, cfg.epsilon_wiener, side);
  return psf::estimate_psf_exemplar(b1, i1, side, cfg).kernel;
}

inline EvalRow evaluate_row(const synthesis::DatasetManifest& m, const synthesis::ManifestRow& r,
                            const net::Checkpoint& ck, const RunConfig& cfg) {
  EvalRow row;
  row.id = r.id;
  row.sigma = r.sigma;
  try {
    const auto s = synthesis::load_sample(m, r, synthesis::NoiseSource::file);
    const auto out = net::infer(ck, s.noisy);
    // Metrics see what a saved output would hold.
    const Image b1 = clamped(out.denoised), i1 = clamped(out.sharp);
    row.psnr_noisy = psnr(s.noisy, s.sharp);
    row.psnr_denoised = psnr(b1, s.blurry);
    row.psnr_sharp = psnr(i1, s.sharp);
    row.ssim_sharp = ssim(i1, s.sharp);
    if (cfg.eval.estimate_psf)
      row.ks = kernel_similarity(estimate_kernel(b1, i1, s.psf.side(), cfg.eval.psf_method, cfg.hqs), s.psf);
    row.ok = true;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  return row;
}

// Runs the cascade on every manifest sample (stored noisy PNGs) and scores it.
// Samples are processed in parallel; rows and aggregates come out in id order.
inline EvalReport evaluate(const synthesis::DatasetManifest& m, const net::Checkpoint& ck, const RunConfig& cfg) {
  if (m.rows.empty()) throw InvalidInput("eval: manifest has no samples");
  std::vector<const synthesis::ManifestRow*> order;
  for (const auto& r : m.rows) order.push_back(&r);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->id < b->id; });

  EvalReport rep;
  rep.rows.resize(order.size());
  const int threads = cfg.eval.threads > 0 ? cfg.eval.threads : default_threads();
  parallel_for(order.size(), threads, [&](std::size_t i) { rep.rows[i] = evaluate_row(m, *order[i], ck, cfg); });

  std::map<double, std::vector<const EvalRow*>> groups;
  std::vector<const EvalRow*> all;
  for (const auto& r : rep.rows) {
    if (!r.ok) continue;
    groups[r.sigma].push_back(&r);
    all.push_back(&r);
  }
  for (const auto& [sigma, rows] : groups) rep.by_sigma[sigma] = aggregate(rows);
  rep.pooled = aggregate(all);
  return rep;
}

namespace detail {

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string sigma_label(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", s);
  return buf;
}

}  // namespace detail

inline std::string format_report_csv(const EvalReport& rep) {
  std::string out = "id,sigma,status,psnr_noisy,psnr_denoised,psnr_sharp,ssim_sharp,ks\n";
  for (const auto& r : rep.rows) {
    out += r.id + "," + detail::sigma_label(r.sigma) + ",";
    if (!r.ok) {
      out += "failed,,,,,\n";
      continue;
    }
    out += "ok," + detail::fixed(r.psnr_noisy, 6) + "," + detail::fixed(r.psnr_denoised, 6) + "," +
           detail::fixed(r.psnr_sharp, 6) + "," + detail::fixed(r.ssim_sharp, 6) + "," +
           (r.ks ? detail::fixed(*r.ks, 6) : std::string()) + "\n";
  }
  return out;
}

// Aligned table with one column per noise level plus a pooled column.
inline std::string format_report_text(const EvalReport& rep) {
  std::vector<std::pair<std::string, const EvalAggregate*>> cols;
  for (const auto& [sigma, agg] : rep.by_sigma) cols.emplace_back("sigma=" + detail::sigma_label(sigma), &agg);
  cols.emplace_back("pooled", &rep.pooled);

  std::string out;
  out += "samples: " + std::to_string(rep.rows.size()) + "  evaluated: " + std::to_string(rep.pooled.count) +
         "  failed: " + std::to_string(rep.failed()) + "\n\n";
  auto line = [&](const std::string& name, auto&& cell) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%-15s", name.c_str());
    out += buf;
    for (const auto& col : cols) {
      std::snprintf(buf, sizeof buf, "%11s", cell(*col.second).c_str());
      out += buf;
    }
    out += "\n";
  };
  {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%-15s", "metric");
    out += buf;
    for (const auto& col : cols) {
      std::snprintf(buf, sizeof buf, "%11s", col.first.c_str());
      out += buf;
    }
    out += "\n";
  }
  line("n", [](const EvalAggregate& a) { return std::to_string(a.count); });
  line("psnr noisy", [](const EvalAggregate& a) { return detail::fixed(a.psnr_noisy, 2); });
  line("psnr denoised", [](const EvalAggregate& a) { return detail::fixed(a.psnr_denoised, 2); });
  line("psnr sharp", [](const EvalAggregate& a) { return detail::fixed(a.psnr_sharp, 2); });
  line("ssim sharp", [](const EvalAggregate& a) { return detail::fixed(a.ssim_sharp, 4); });
  if (rep.pooled.ks_count)
    line("kernel sim", [](const EvalAggregate& a) { return a.ks_count ? detail::fixed(a.ks, 4) : std::string("-"); });
  out += "\nThe pooled SSIM is the single overall figure; per-level SSIM is for inspection.\n";
  if (rep.failed()) {
    out += "\nfailed samples:\n";
    for (const auto& r : rep.rows)
      if (!r.ok) out += "  " + r.id + ": " + r.error + "\n";
  }
  return out;
}

inline void write_report(const std::filesystem::path& dir, const EvalReport& rep) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "report.csv", std::ios::binary) << format_report_csv(rep);
  std::ofstream(dir / "report.txt", std::ios::binary) << format_report_text(rep);
}

}  // namespace nidf::pipeline
