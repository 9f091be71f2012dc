#pragma once

#include <png.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "nidf/core/image.hpp"

namespace nidf {

// PSF text format:
//   PSF <side>
//   <side lines of side decimal floats>
inline std::string format_psf(const Psf& psf) {
  std::string out = "PSF " + std::to_string(psf.side()) + "\n";
  char buf[32];
  for (int y = 0; y < psf.side(); ++y) {
    for (int x = 0; x < psf.side(); ++x) {
      std::snprintf(buf, sizeof buf, "%.17g", psf.at(y, x));
      if (x) out += ' ';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

inline Psf parse_psf(std::istream& in) {
  std::string tag;
  int side = 0;
  if (!(in >> tag >> side) || tag != "PSF") throw InvalidInput("psf text: missing 'PSF <side>' header");
  if (side < 1 || side % 2 == 0 || side > 4095) throw InvalidInput("psf text: side must be odd");
  std::vector<double> w(static_cast<std::size_t>(side) * side);
  for (auto& v : w)
    if (!(in >> v)) throw InvalidInput("psf text: expected " + std::to_string(side * side) + " values");
  std::string extra;
  if (in >> extra) throw InvalidInput("psf text: trailing data");
  return {side, std::move(w)};
}

inline void write_psf(const std::filesystem::path& path, const Psf& psf) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << format_psf(psf);
}

inline Psf read_psf(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read " + path.string());
  return parse_psf(in);
}

// 8-bit PNG. Grayscale files load as 1 channel, everything else as RGB.
inline Image read_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str()))
    throw InvalidInput("cannot read png " + path.string() + ": " + png.message);
  const bool gray = (png.format & PNG_FORMAT_FLAG_COLOR) == 0;
  png.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    throw InvalidInput("cannot decode png " + path.string() + ": " + msg);
  }
  const int channels = gray ? 1 : 3;
  Image img(static_cast<int>(png.height), static_cast<int>(png.width), channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < channels; ++c)
        img.at(y, x, c) = buf[(static_cast<std::size_t>(y) * img.width + x) * channels + c] / 255.0;
  return img;
}

inline unsigned char quantize(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

inline void write_png(const std::filesystem::path& path, const Image& img) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width);
  png.height = static_cast<png_uint_32>(img.height);
  png.format = img.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(png));
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        buf[(static_cast<std::size_t>(y) * img.width + x) * img.channels + c] = quantize(img.at(y, x, c));
  if (!png_image_write_to_file(&png, path.c_str(), 0, buf.data(), 0, nullptr))
    throw std::runtime_error("cannot write png " + path.string() + ": " + png.message);
}

// Center-crops to a square, then area-resamples to size x size.
inline Image resize_square(const Image& img, int size) {
  if (size < 1) throw InvalidInput("resize: size must be >= 1");
  const int side = std::min(img.height, img.width);
  const int oy = (img.height - side) / 2, ox = (img.width - side) / 2;
  Image out(size, size, img.channels);
  const double scale = static_cast<double>(side) / size;
  for (int c = 0; c < img.channels; ++c) {
    for (int y = 0; y < size; ++y) {
      const double y0 = y * scale, y1 = (y + 1) * scale;
      for (int x = 0; x < size; ++x) {
        const double x0 = x * scale, x1 = (x + 1) * scale;
        double acc = 0.0, area = 0.0;
        for (int sy = static_cast<int>(std::floor(y0)); sy < static_cast<int>(std::ceil(y1)) && sy < side; ++sy) {
          const double wy = std::min(y1, sy + 1.0) - std::max(y0, static_cast<double>(sy));
          for (int sx = static_cast<int>(std::floor(x0)); sx < static_cast<int>(std::ceil(x1)) && sx < side; ++sx) {
            const double wx = std::min(x1, sx + 1.0) - std::max(x0, static_cast<double>(sx));
            acc += wy * wx * img.at(oy + sy, ox + sx, c);
            area += wy * wx;
          }
        }
        out.at(y, x, c) = acc / area;
      }
    }
  }
  return out;
}

}  // namespace nidf
