#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nidf/network/unet.hpp"

namespace nidf::net {

// Both subnets of the cascade plus run metadata. Weights are kept as
// 32-bit floats, exactly as stored on disk.
struct Checkpoint {
  NetArch arch;
  std::string stage = "init";
  int epoch = 0;
  std::uint64_t seed = 0;
  double learning_rate = 0.0;
  int batch_size = 0;
  int precision = 32;
  std::vector<double> losses;  // mean training loss per epoch
  std::vector<float> net1;     // denoiser
  std::vector<float> net2;     // deblurrer

  template <typename T>
  [[nodiscard]] NetParams<T> params1() const {
    auto p = make_params<T>(arch);
    p.assign(net1);
    return p;
  }
  template <typename T>
  [[nodiscard]] NetParams<T> params2() const {
    auto p = make_params<T>(arch);
    p.assign(net2);
    return p;
  }
  template <typename T>
  void store(const NetParams<T>& p1, const NetParams<T>& p2) {
    const auto f1 = p1.flatten(), f2 = p2.flatten();
    net1.assign(f1.begin(), f1.end());
    net2.assign(f2.begin(), f2.end());
  }

  bool operator==(const Checkpoint&) const = default;
};

inline Checkpoint initial_checkpoint(const NetArch& arch, std::uint64_t seed) {
  Checkpoint ck;
  ck.arch = arch;
  ck.seed = seed;
  ck.store(init_params<double>(arch, derive_seed(seed, 1)), init_params<double>(arch, derive_seed(seed, 2)));
  return ck;
}

// Residual arch with every weight zero: both subnets are the identity.
inline Checkpoint identity_checkpoint(NetArch arch) {
  arch.residual = true;
  Checkpoint ck;
  ck.arch = arch;
  const auto n = make_params<float>(arch).count();
  ck.net1.assign(n, 0.0f);
  ck.net2.assign(n, 0.0f);
  return ck;
}

inline constexpr const char* kCheckpointMagic = "NIDF1";

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void put_floats(std::string& out, const std::vector<float>& v) {
  static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
  for (float f : v) {
    auto bits = std::bit_cast<std::uint32_t>(f);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
  }
}

inline std::vector<float> get_floats(std::istream& in, std::size_t n) {
  std::vector<float> v(n);
  for (auto& f : v) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw InvalidInput("checkpoint: truncated tensor data");
    const std::uint32_t bits = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    f = std::bit_cast<float>(bits);
  }
  return v;
}

}  // namespace detail

// Layout: "NIDF1\n", "key value" header lines, a blank line, then
// little-endian float32 tensors (net1 then net2, each in layer declaration
// order, weights before biases).
inline std::string serialize_checkpoint(const Checkpoint& ck) {
  std::string out = std::string(kCheckpointMagic) + "\n";
  out += "arch levels=" + std::to_string(ck.arch.levels) + " base_channels=" + std::to_string(ck.arch.base_channels) +
         " image_channels=" + std::to_string(ck.arch.image_channels) + " residual=" + (ck.arch.residual ? "1" : "0") +
         "\n";
  out += "stage " + ck.stage + "\n";
  out += "epoch " + std::to_string(ck.epoch) + "\n";
  out += "seed " + std::to_string(ck.seed) + "\n";
  out += "lr " + detail::format_double(ck.learning_rate) + "\n";
  out += "batch " + std::to_string(ck.batch_size) + "\n";
  out += "precision " + std::to_string(ck.precision) + "\n";
  out += "losses";
  for (double l : ck.losses) out += " " + detail::format_double(l);
  out += "\n";
  out += "tensors " + std::to_string(ck.net1.size()) + " " + std::to_string(ck.net2.size()) + "\n\n";
  detail::put_floats(out, ck.net1);
  detail::put_floats(out, ck.net2);
  return out;
}

inline Checkpoint parse_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic) throw InvalidInput("checkpoint: bad magic");
  Checkpoint ck;
  std::size_t n1 = 0, n2 = 0;
  bool have_arch = false, have_tensors = false;
  while (std::getline(in, line) && !line.empty()) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "arch") {
      int residual = 1;
      std::string tok;
      while (ls >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw InvalidInput("checkpoint: bad arch token " + tok);
        const std::string k = tok.substr(0, eq);
        const int v = std::stoi(tok.substr(eq + 1));
        if (k == "levels") ck.arch.levels = v;
        else if (k == "base_channels") ck.arch.base_channels = v;
        else if (k == "image_channels") ck.arch.image_channels = v;
        else if (k == "residual") residual = v;
        else throw InvalidInput("checkpoint: unknown arch key " + k);
      }
      ck.arch.residual = residual != 0;
      ck.arch.validate();
      have_arch = true;
    } else if (key == "stage") {
      ls >> ck.stage;
    } else if (key == "epoch") {
      ls >> ck.epoch;
    } else if (key == "seed") {
      ls >> ck.seed;
    } else if (key == "lr") {
      ls >> ck.learning_rate;
    } else if (key == "batch") {
      ls >> ck.batch_size;
    } else if (key == "precision") {
      ls >> ck.precision;
    } else if (key == "losses") {
      for (double v; ls >> v;) ck.losses.push_back(v);
    } else if (key == "tensors") {
      ls >> n1 >> n2;
      have_tensors = true;
    } else {
      throw InvalidInput("checkpoint: unknown header key " + key);
    }
  }
  if (!have_arch || !have_tensors) throw InvalidInput("checkpoint: header lacks arch or tensors");
  const auto expected = make_params<float>(ck.arch).count();
  if (n1 != expected || n2 != expected) throw InvalidInput("checkpoint: tensor count does not match arch");
  ck.net1 = detail::get_floats(in, n1);
  ck.net2 = detail::get_floats(in, n2);
  if (in.peek() != std::char_traits<char>::eof()) throw InvalidInput("checkpoint: trailing bytes");
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const auto bytes = serialize_checkpoint(ck);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read checkpoint " + path.string());
  return parse_checkpoint(in);
}

}  // namespace nidf::net
