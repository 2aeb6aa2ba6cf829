#pragma once

// Spectral-residual saliency: the log amplitude spectrum minus its local
// average, recombined with the original phase, marks the parts of an image
// that are not explained by its smooth spectral envelope.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semrel/error.hpp"
#include "semrel/geometry.hpp"
#include "semrel/pnm.hpp"

namespace semrel {

// Values in [0, 1], same dimensions as the source image.
using SaliencyMap = GrayImage;

struct SRParams {
  int work_size = 64;
  double gaussian_sigma = 2.0;
  double log_epsilon = 1e-8;

  int kernel_radius() const { return static_cast<int>(std::ceil(3.0 * gaussian_sigma)); }

  void validate() const {
    if (work_size != 32 && work_size != 64 && work_size != 128 && work_size != 256) {
      throw Error(Errc::kInvalidArgument, "work_size must be one of 32, 64, 128, 256");
    }
    if (!(gaussian_sigma > 0.0) || !std::isfinite(gaussian_sigma)) {
      throw Error(Errc::kInvalidArgument, "gaussian_sigma must be positive");
    }
    if (!(log_epsilon > 0.0) || !std::isfinite(log_epsilon)) {
      throw Error(Errc::kInvalidArgument, "log_epsilon must be positive");
    }
  }
};

struct ComplexGrid {
  int width = 0;
  int height = 0;
  std::vector<std::complex<double>> data;

  ComplexGrid() = default;
  ComplexGrid(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h) {}
  ComplexGrid(int w, int h, std::vector<std::complex<double>> d) : width(w), height(h), data(std::move(d)) {}

  std::complex<double>& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  const std::complex<double>& at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

// Pixel-center aligned bilinear resampling with edge clamping.
inline GrayImage resize_bilinear(const GrayImage& img, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) throw Error(Errc::kInvalidArgument, "output size must be positive");
  if (out_w == img.width && out_h == img.height) return img;

  auto sample_axis = [](int dst, int in, int out, int& i0, int& i1, double& t) {
    double src = (static_cast<double>(dst) + 0.5) * static_cast<double>(in) / static_cast<double>(out) - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    i0 = static_cast<int>(std::floor(src));
    i1 = std::min(i0 + 1, in - 1);
    t = src - static_cast<double>(i0);
  };

  GrayImage out(out_w, out_h);
  for (int y = 0; y < out_h; ++y) {
    int y0, y1;
    double ty;
    sample_axis(y, img.height, out_h, y0, y1, ty);
    for (int x = 0; x < out_w; ++x) {
      int x0, x1;
      double tx;
      sample_axis(x, img.width, out_w, x0, x1, tx);
      const double top = img.at(x0, y0) + tx * (img.at(x1, y0) - img.at(x0, y0));
      const double bot = img.at(x0, y1) + tx * (img.at(x1, y1) - img.at(x0, y1));
      out.at(x, y) = top + ty * (bot - top);
    }
  }
  return out;
}

namespace detail {

inline bool is_pow2(int n) { return n > 0 && std::has_single_bit(static_cast<unsigned>(n)); }

// In-place iterative radix-2 transform over a strided sequence.
inline void fft1d(std::complex<double>* a, int n, int stride, bool inverse,
                  std::vector<std::complex<double>>& scratch) {
  scratch.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) scratch[i] = a[static_cast<std::ptrdiff_t>(i) * stride];

  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(scratch[i], scratch[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (int len = 2; len <= n; len <<= 1) {
    const int half = len / 2;
    for (int k = 0; k < half; ++k) {
      const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
      const std::complex<double> w(std::cos(ang), std::sin(ang));
      for (int start = 0; start < n; start += len) {
        const std::complex<double> u = scratch[start + k];
        const std::complex<double> v = scratch[start + k + half] * w;
        scratch[start + k] = u + v;
        scratch[start + k + half] = u - v;
      }
    }
  }
  for (int i = 0; i < n; ++i) a[static_cast<std::ptrdiff_t>(i) * stride] = scratch[i];
}

}  // namespace detail

// Unnormalized forward transform; the inverse carries the 1/(W*H) factor.
inline ComplexGrid fft2(ComplexGrid grid, bool inverse) {
  if (!detail::is_pow2(grid.width) || !detail::is_pow2(grid.height)) {
    throw Error(Errc::kNonPowerOfTwo,
                std::to_string(grid.width) + "x" + std::to_string(grid.height) + " is not a power-of-two grid");
  }
  std::vector<std::complex<double>> scratch;
  for (int y = 0; y < grid.height; ++y) detail::fft1d(&grid.at(0, y), grid.width, 1, inverse, scratch);
  for (int x = 0; x < grid.width; ++x) detail::fft1d(&grid.at(x, 0), grid.height, grid.width, inverse, scratch);
  if (inverse) {
    const double s = 1.0 / (static_cast<double>(grid.width) * static_cast<double>(grid.height));
    for (auto& c : grid.data) c *= s;
  }
  return grid;
}

// Normalized Gaussian kernel of length 2*radius+1.
inline std::vector<double> gaussian_kernel(double sigma, int radius) {
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    total += v;
  }
  for (double& v : k) v /= total;
  return k;
}

// Separable blur with replicate-edge padding on a row-major real grid.
inline std::vector<double> gaussian_blur(const std::vector<double>& src, int width, int height, double sigma,
                                         int radius) {
  const std::vector<double> k = gaussian_kernel(sigma, radius);
  std::vector<double> tmp(src.size());
  std::vector<double> out(src.size());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int xx = std::clamp(x + i, 0, width - 1);
        acc += k[static_cast<std::size_t>(i + radius)] * src[static_cast<std::size_t>(y) * width + xx];
      }
      tmp[static_cast<std::size_t>(y) * width + x] = acc;
    }
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int yy = std::clamp(y + i, 0, height - 1);
        acc += k[static_cast<std::size_t>(i + radius)] * tmp[static_cast<std::size_t>(yy) * width + x];
      }
      out[static_cast<std::size_t>(y) * width + x] = acc;
    }
  }
  return out;
}

// Min-max normalization in place; returns false (and zeros the grid) when the
// range is below 1e-12.
inline bool normalize_unit_range(std::vector<double>& v) {
  if (v.empty()) return false;
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  if (!(range >= 1e-12)) {
    std::fill(v.begin(), v.end(), 0.0);
    return false;
  }
  for (double& x : v) x = (x - lo) / range;
  return true;
}

// Steps after the transform: residual of the log amplitude against its
// Gaussian-smoothed copy, recombined with the phase and inverted to an energy
// map, min-max normalized. `spectrum` is the forward transform of the
// work-size image.
inline std::vector<double> residual_energy_from_spectrum(const ComplexGrid& spectrum, const SRParams& p) {
  const int n = spectrum.width;
  const int m = spectrum.height;
  std::vector<double> log_amp(spectrum.data.size());
  for (std::size_t i = 0; i < spectrum.data.size(); ++i) {
    log_amp[i] = std::log(std::abs(spectrum.data[i]) + p.log_epsilon);
  }
  const std::vector<double> smoothed = gaussian_blur(log_amp, n, m, p.gaussian_sigma, p.kernel_radius());

  ComplexGrid recombined(n, m);
  for (std::size_t i = 0; i < spectrum.data.size(); ++i) {
    recombined.data[i] = std::polar(std::exp(log_amp[i] - smoothed[i]), std::arg(spectrum.data[i]));
  }
  const ComplexGrid back = fft2(std::move(recombined), true);
  std::vector<double> energy(back.data.size());
  for (std::size_t i = 0; i < back.data.size(); ++i) energy[i] = std::norm(back.data[i]);
  normalize_unit_range(energy);
  return energy;
}

inline SaliencyMap spectral_residual(const GrayImage& img, const SRParams& p = {}) {
  p.validate();
  if (img.width < 1 || img.height < 1 || img.pixels.size() != static_cast<std::size_t>(img.width) * img.height) {
    throw Error(Errc::kInvalidArgument, "image has inconsistent dimensions");
  }
  SaliencyMap out(img.width, img.height, 0.0);

  const GrayImage work = resize_bilinear(img, p.work_size, p.work_size);
  const auto [lo, hi] = std::minmax_element(work.pixels.begin(), work.pixels.end());
  // A flat image has no spectral content beyond DC.
  if (!(*hi - *lo >= 1e-12)) return out;

  ComplexGrid grid(p.work_size, p.work_size);
  for (std::size_t i = 0; i < work.pixels.size(); ++i) grid.data[i] = work.pixels[i];
  const ComplexGrid spectrum = fft2(std::move(grid), false);

  GrayImage energy(p.work_size, p.work_size);
  energy.pixels = residual_energy_from_spectrum(spectrum, p);
  GrayImage resized = resize_bilinear(energy, img.width, img.height);
  // Resampling can shave the extremes; restore the [0, 1] span.
  normalize_unit_range(resized.pixels);
  out.pixels = std::move(resized.pixels);
  return out;
}

enum class SaliencyReduce { kMean, kMax, kSum };

// Reduces map values at pixel centers inside the box. Returns nullopt when no
// pixel center falls inside.
inline std::optional<double> object_saliency(const SaliencyMap& map, const BBox& b,
                                             SaliencyReduce reduce = SaliencyReduce::kMean) {
  const int x_begin = std::max(0, static_cast<int>(std::ceil(b.x - 0.5)));
  const int y_begin = std::max(0, static_cast<int>(std::ceil(b.y - 0.5)));
  const int x_end = std::min(map.width, static_cast<int>(std::ceil(b.right() - 0.5)));
  const int y_end = std::min(map.height, static_cast<int>(std::ceil(b.bottom() - 0.5)));
  if (x_begin >= x_end || y_begin >= y_end) return std::nullopt;

  double sum = 0.0;
  double best = 0.0;
  std::size_t count = 0;
  for (int y = y_begin; y < y_end; ++y) {
    for (int x = x_begin; x < x_end; ++x) {
      const double v = map.at(x, y);
      sum += v;
      best = count == 0 ? v : std::max(best, v);
      ++count;
    }
  }
  switch (reduce) {
    case SaliencyReduce::kMean: return sum / static_cast<double>(count);
    case SaliencyReduce::kMax: return best;
    case SaliencyReduce::kSum: return sum;
  }
  return std::nullopt;
}

}  // namespace semrel
