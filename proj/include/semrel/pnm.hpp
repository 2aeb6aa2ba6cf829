#pragma once

// Portable anymap I/O: P2/P5 graymaps and P3/P6 pixmaps in, P5 and CSV out.
// Color input is reduced to Rec.601 luma.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <utility>
#include <vector>

#include "semrel/error.hpp"

namespace semrel {

// Row-major intensities in [0, 1].
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}
  GrayImage(int w, int h, std::vector<double> px) : width(w), height(h), pixels(std::move(px)) {}

  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

namespace detail {

class PnmHeaderReader {
 public:
  explicit PnmHeaderReader(const std::string& bytes) : bytes_(bytes) {}

  std::size_t offset() const noexcept { return pos_; }

  // Reads one unsigned decimal field, skipping whitespace and '#' comments.
  unsigned long next_uint(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    unsigned long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + static_cast<unsigned long>(bytes_[pos_] - '0');
      if (value > 1'000'000'000UL) fail(std::string(what) + " out of range", start);
      ++pos_;
    }
    if (pos_ == start) fail(std::string("expected ") + what, start);
    return value;
  }

  // Binary rasters start after exactly one whitespace byte.
  void consume_single_whitespace() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      fail("expected whitespace before raster", pos_);
    }
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
    throw Error(Errc::kMalformedHeader, msg + " at byte offset " + std::to_string(at));
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 2;
};

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIoError, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace detail

inline GrayImage decode_pnm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') throw Error(Errc::kUnsupportedFormat, "not a portable anymap");
  const char kind = bytes[1];
  if (kind != '2' && kind != '3' && kind != '5' && kind != '6') {
    throw Error(Errc::kUnsupportedFormat, std::string("magic P") + kind);
  }
  const bool ascii = kind == '2' || kind == '3';
  const int channels = (kind == '3' || kind == '6') ? 3 : 1;

  detail::PnmHeaderReader header(bytes);
  const std::size_t w_at = header.offset();
  const unsigned long w = header.next_uint("width");
  const unsigned long h = header.next_uint("height");
  const unsigned long maxval = header.next_uint("maxval");
  if (w == 0 || h == 0 || w > 65536 || h > 65536) header.fail("invalid dimensions", w_at);
  if (maxval == 0) header.fail("maxval must be positive", header.offset());
  if (maxval > 255) throw Error(Errc::kUnsupportedFormat, "only 8-bit maps are supported (maxval <= 255)");

  GrayImage img(static_cast<int>(w), static_cast<int>(h));
  const std::size_t n = static_cast<std::size_t>(w) * h;
  const double scale = 1.0 / static_cast<double>(maxval);
  std::vector<unsigned long> sample(channels);

  auto to_gray = [&](const std::vector<unsigned long>& s) {
    if (channels == 1) return static_cast<double>(s[0]) * scale;
    return (0.299 * static_cast<double>(s[0]) + 0.587 * static_cast<double>(s[1]) +
            0.114 * static_cast<double>(s[2])) *
           scale;
  };

  if (ascii) {
    for (std::size_t i = 0; i < n; ++i) {
      for (int c = 0; c < channels; ++c) {
        sample[c] = header.next_uint("sample");
        if (sample[c] > maxval) header.fail("sample exceeds maxval", header.offset());
      }
      img.pixels[i] = to_gray(sample);
    }
  } else {
    header.consume_single_whitespace();
    std::size_t pos = header.offset();
    if (bytes.size() - pos < n * channels) {
      throw Error(Errc::kMalformedHeader, "raster truncated at byte offset " + std::to_string(bytes.size()));
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (int c = 0; c < channels; ++c) {
        sample[c] = static_cast<unsigned char>(bytes[pos++]);
        if (sample[c] > maxval) header.fail("sample exceeds maxval", pos - 1);
      }
      img.pixels[i] = to_gray(sample);
    }
  }
  for (double& p : img.pixels) p = std::min(p, 1.0);
  return img;
}

inline GrayImage load_gray(const std::filesystem::path& path) { return decode_pnm(detail::read_file_bytes(path)); }

// Values scaled to 0..255 and rounded half-up.
inline std::string encode_p5(const GrayImage& img) {
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.reserve(out.size() + img.pixels.size());
  for (double v : img.pixels) {
    const double q = std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
    out.push_back(static_cast<char>(static_cast<std::uint8_t>(q)));
  }
  return out;
}

// One image row per line, comma-separated, 17 significant digits.
inline std::string encode_grid_csv(const GrayImage& img) {
  std::string out;
  char buf[32];
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      std::snprintf(buf, sizeof buf, "%.17g", img.at(x, y));
      if (x > 0) out.push_back(',');
      out += buf;
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace semrel
