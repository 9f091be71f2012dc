#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nidf/core/io.hpp"
#include "nidf/core/rng.hpp"
#include "nidf/synthesis/degrade.hpp"
#include "nidf/synthesis/random_walk.hpp"

namespace nidf::synthesis {

namespace fs = std::filesystem;

struct ManifestRow {
  std::string id;
  std::string sharp;
  std::string blurry;
  std::string noisy;
  std::string psf;
  double sigma = 0.0;
  std::uint64_t seed = 0;  // noise seed; regenerates the unclamped noisy image
};

// Paths in rows are relative to root (the manifest's directory).
struct DatasetManifest {
  fs::path root;
  std::vector<ManifestRow> rows;

  [[nodiscard]] fs::path resolve(const std::string& rel) const { return root / rel; }
};

inline constexpr const char* kManifestHeader = "id,sharp,blurry,noisy,psf,sigma,seed";

inline std::string format_manifest(const DatasetManifest& m) {
  std::ostringstream out;
  out << kManifestHeader << '\n';
  for (const auto& r : m.rows)
    out << r.id << ',' << r.sharp << ',' << r.blurry << ',' << r.noisy << ',' << r.psf << ',' << r.sigma << ','
        << r.seed << '\n';
  return out.str();
}

inline void write_manifest(const fs::path& path, const DatasetManifest& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << format_manifest(m);
}

inline DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read manifest " + path.string());
  DatasetManifest m;
  m.root = path.parent_path();
  std::string line;
  if (!std::getline(in, line) || line != kManifestHeader) throw InvalidInput("manifest: bad header in " + path.string());
  std::set<std::string> ids;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 7) throw InvalidInput("manifest line " + std::to_string(lineno) + ": expected 7 fields");
    ManifestRow r{cells[0], cells[1], cells[2], cells[3], cells[4], 0.0, 0};
    try {
      r.sigma = std::stod(cells[5]);
      r.seed = std::stoull(cells[6]);
    } catch (const std::exception&) {
      throw InvalidInput("manifest line " + std::to_string(lineno) + ": bad sigma/seed");
    }
    if (!ids.insert(r.id).second) throw InvalidInput("manifest: duplicate id " + r.id);
    m.rows.push_back(std::move(r));
  }
  return m;
}

// Checks that every referenced artifact exists and parses.
inline void validate_manifest(const DatasetManifest& m) {
  std::set<std::string> ids;
  for (const auto& r : m.rows) {
    if (!ids.insert(r.id).second) throw InvalidInput("manifest: duplicate id " + r.id);
    for (const auto* p : {&r.sharp, &r.blurry, &r.noisy}) read_png(m.resolve(*p));
    read_psf(m.resolve(r.psf));
  }
}

struct Sample {
  std::string id;
  double sigma = 0.0;
  Image sharp;   // I
  Image blurry;  // B
  Image noisy;   // N
  Psf psf;
};

enum class NoiseSource {
  regenerate,  // B from disk plus noise regenerated from the recorded seed (unclamped)
  file,        // the stored, clamped and quantized PNG
};

inline Sample load_sample(const DatasetManifest& m, const ManifestRow& r, NoiseSource noise) {
  Sample s;
  s.id = r.id;
  s.sigma = r.sigma;
  s.sharp = read_png(m.resolve(r.sharp));
  s.blurry = read_png(m.resolve(r.blurry));
  s.noisy = noise == NoiseSource::regenerate ? add_noise(s.blurry, {r.sigma, r.seed}) : read_png(m.resolve(r.noisy));
  s.psf = read_psf(m.resolve(r.psf));
  return s;
}

struct SynthConfig {
  int size = 64;
  int max_half_side = 0;  // 0: min(24, size/8), never below 3
  int channels = 1;       // inputs are converted to this many channels
  int walk_steps = 256;
  double walk_inertia = 0.7;
  double walk_jitter = 0.5;

  [[nodiscard]] int effective_max_half_side() const {
    const int cap = max_half_side > 0 ? max_half_side : std::min(WalkParams::kMaxHalfSide, size / 8);
    return std::clamp(cap, WalkParams::kMinHalfSide, WalkParams::kMaxHalfSide);
  }
};

// Everything about one sample that is drawn from its random stream.
struct SampleDraw {
  int half_side = 3;
  double sigma = 10.0;
  std::uint64_t walk_seed = 0;
  std::uint64_t noise_seed = 0;
};

inline SampleDraw draw_sample(std::uint64_t seed, std::uint64_t index, const SynthConfig& cfg) {
  Rng rng(derive_seed(seed, index));
  SampleDraw d;
  d.half_side = std::uniform_int_distribution<int>(WalkParams::kMinHalfSide, cfg.effective_max_half_side())(rng);
  d.sigma = kNoiseLevels[std::uniform_int_distribution<int>(0, 3)(rng)];
  d.walk_seed = rng();
  d.noise_seed = rng();
  return d;
}

inline Image convert_channels(const Image& img, int channels) {
  if (img.channels == channels) return img;
  if (channels == 1) return luminance(img);
  Image out(img.height, img.width, 3);
  for (int c = 0; c < 3; ++c) std::copy(img.data.begin(), img.data.end(), out.plane(c).begin());
  return out;
}

// Degrades one sharp image: resize, random-walk blur, AWGN.
inline Sample synthesize_sample(const Image& source, const std::string& id, std::uint64_t seed, std::uint64_t index,
                                const SynthConfig& cfg) {
  const SampleDraw d = draw_sample(seed, index, cfg);
  Sample s;
  s.id = id;
  s.sigma = d.sigma;
  s.sharp = resize_square(convert_channels(source, cfg.channels), cfg.size);
  s.psf = random_walk_psf({d.half_side, cfg.walk_steps, cfg.walk_inertia, cfg.walk_jitter, d.walk_seed});
  s.blurry = blur(s.sharp, s.psf);
  s.noisy = add_noise(s.blurry, {d.sigma, d.noise_seed});
  return s;
}

inline std::vector<fs::path> list_pngs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InvalidInput("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (e.is_regular_file() && ext == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

inline std::string sample_id(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%06zu", index);
  return buf;
}

// Writes sharp/, blurry/, noisy/, psf/ plus manifest.csv and manifest.json
// under out_dir. Sharp inputs are taken in sorted filename order; unreadable
// files are logged and skipped.
inline DatasetManifest build_dataset(const fs::path& sharp_dir, const fs::path& out_dir, int count, std::uint64_t seed,
                                     const SynthConfig& cfg = {}, std::ostream& log = std::cerr) {
  if (count < 1) throw InvalidInput("build_dataset: count must be >= 1");
  if (cfg.size < 16) throw InvalidInput("build_dataset: size must be >= 16");
  const auto files = list_pngs(sharp_dir);
  if (files.size() < static_cast<std::size_t>(count))
    throw InvalidInput("build_dataset: " + sharp_dir.string() + " holds " + std::to_string(files.size()) +
                       " pngs, need " + std::to_string(count));
  for (const char* sub : {"sharp", "blurry", "noisy", "psf"}) fs::create_directories(out_dir / sub);

  DatasetManifest m;
  m.root = out_dir;
  for (const auto& file : files) {
    if (m.rows.size() == static_cast<std::size_t>(count)) break;
    Image source;
    try {
      source = read_png(file);
    } catch (const std::exception& e) {
      log << "synth: skipping " << file.string() << ": " << e.what() << '\n';
      continue;
    }
    const std::size_t index = m.rows.size();
    const std::string id = sample_id(index);
    const Sample s = synthesize_sample(source, id, seed, index, cfg);
    const SampleDraw d = draw_sample(seed, index, cfg);
    ManifestRow row{id, "sharp/" + id + ".png", "blurry/" + id + ".png", "noisy/" + id + ".png", "psf/" + id + ".txt",
                    s.sigma, d.noise_seed};
    write_png(m.resolve(row.sharp), s.sharp);
    write_png(m.resolve(row.blurry), s.blurry);
    write_png(m.resolve(row.noisy), s.noisy);
    write_psf(m.resolve(row.psf), s.psf);
    m.rows.push_back(std::move(row));
  }
  if (m.rows.empty()) throw std::runtime_error("build_dataset: no readable inputs");
  write_manifest(out_dir / "manifest.csv", m);

  nlohmann::json histogram = nlohmann::json::object();
  for (double level : kNoiseLevels) {
    const auto n = std::count_if(m.rows.begin(), m.rows.end(), [&](const ManifestRow& r) { return r.sigma == level; });
    histogram[std::to_string(static_cast<int>(level))] = n;
  }
  nlohmann::json meta = {{"size", cfg.size},
                         {"channels", cfg.channels},
                         {"half_side_min", WalkParams::kMinHalfSide},
                         {"half_side_max", cfg.effective_max_half_side()},
                         {"walk", {{"steps", cfg.walk_steps}, {"inertia", cfg.walk_inertia}, {"jitter", cfg.walk_jitter}}},
                         {"noise_levels", kNoiseLevels},
                         {"seed", seed},
                         {"count", m.rows.size()},
                         {"sigma_histogram", histogram}};
  std::ofstream(out_dir / "manifest.json", std::ios::binary) << meta.dump(2) << '\n';
  return m;
}

}  // namespace nidf::synthesis
