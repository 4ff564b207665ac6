#include "mdcn/synth.hpp"

#include <algorithm>
#include <cmath>

#include "mdcn/errors.hpp"
#include "mdcn/rng.hpp"

namespace mdcn {

ImageRGB synth_image(int64_t height, int64_t width, uint64_t seed) {
  if (height < 1 || width < 1) throw ConfigError("synth_image: empty size");
  RandomEngine rng(seed);
  constexpr int kWaves = 6;
  struct Wave {
    double fy, fx, amp;
    double phase[3];
  };
  std::vector<Wave> waves(kWaves);
  for (auto& w : waves) {
    w.fy = rng.uniform(0.05, 0.9);
    w.fx = rng.uniform(0.05, 0.9);
    w.amp = rng.uniform(0.08, 0.25);
    for (double& p : w.phase) p = rng.uniform(0.0, 6.283185307179586);
  }
  const double cy = rng.uniform(0.25, 0.75) * static_cast<double>(height);
  const double cx = rng.uniform(0.25, 0.75) * static_cast<double>(width);
  const double rad = 0.3 * static_cast<double>(std::min(height, width));

  ImageRGB img;
  img.height = height;
  img.width = width;
  img.pixels.resize(static_cast<size_t>(3 * height * width));
  for (int64_t c = 0; c < 3; ++c) {
    for (int64_t h = 0; h < height; ++h) {
      for (int64_t w = 0; w < width; ++w) {
        double v = 0.5;
        for (const auto& wave : waves) {
          v += wave.amp * std::sin(wave.fy * static_cast<double>(h) +
                                   wave.fx * static_cast<double>(w) +
                                   wave.phase[c]);
        }
        const double dy = (static_cast<double>(h) - cy) / rad;
        const double dx = (static_cast<double>(w) - cx) / rad;
        v += 0.2 * std::exp(-(dy * dy + dx * dx));
        img.at(c, h, w) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return img;
}

namespace {

// One-dimensional Keys cubic tap weights for a fractional offset in [0, 1).
void cubic_taps(double frac, double w[4]) {
  w[0] = cubic_kernel(frac + 1.0);
  w[1] = cubic_kernel(frac);
  w[2] = cubic_kernel(1.0 - frac);
  w[3] = cubic_kernel(2.0 - frac);
}

int64_t clamp_idx(int64_t i, int64_t n) { return std::clamp<int64_t>(i, 0, n - 1); }

}  // namespace

ImageRGB translate_image(const ImageRGB& src, double dy, double dx) {
  ImageRGB out;
  out.height = src.height;
  out.width = src.width;
  out.pixels.resize(src.pixels.size());

  const double fy = std::floor(dy);
  const double fx = std::floor(dx);
  const int64_t iy = static_cast<int64_t>(fy);
  const int64_t ix = static_cast<int64_t>(fx);
  double wy[4], wx[4];
  cubic_taps(dy - fy, wy);
  cubic_taps(dx - fx, wx);

  for (int64_t c = 0; c < 3; ++c) {
    for (int64_t h = 0; h < src.height; ++h) {
      for (int64_t w = 0; w < src.width; ++w) {
        double acc = 0.0;
        for (int a = 0; a < 4; ++a) {
          const int64_t sy = clamp_idx(h + iy - 1 + a, src.height);
          double row = 0.0;
          for (int b = 0; b < 4; ++b) {
            const int64_t sx = clamp_idx(w + ix - 1 + b, src.width);
            row += wx[b] * static_cast<double>(src.at(c, sy, sx));
          }
          acc += wy[a] * row;
        }
        out.at(c, h, w) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
      }
    }
  }
  return out;
}

std::vector<ImageRGB> synth_sequence(int64_t height, int64_t width,
                                     int64_t frames, double dy, double dx,
                                     uint64_t seed) {
  if (frames < 1) throw ConfigError("synth_sequence: need at least one frame");
  const double half = static_cast<double>(frames / 2);
  const int64_t margin =
      4 + static_cast<int64_t>(std::ceil(half * std::max(std::abs(dy), std::abs(dx))));
  ImageRGB scene = synth_image(height + 2 * margin, width + 2 * margin, seed);

  std::vector<ImageRGB> seq;
  seq.reserve(static_cast<size_t>(frames));
  for (int64_t t = 0; t < frames; ++t) {
    const double off = static_cast<double>(t) - half;
    ImageRGB shifted = translate_image(scene, off * dy, off * dx);
    ImageRGB frame;
    frame.height = height;
    frame.width = width;
    frame.pixels.resize(static_cast<size_t>(3 * height * width));
    for (int64_t c = 0; c < 3; ++c) {
      for (int64_t h = 0; h < height; ++h) {
        for (int64_t w = 0; w < width; ++w) {
          frame.at(c, h, w) = shifted.at(c, h + margin, w + margin);
        }
      }
    }
    seq.push_back(std::move(frame));
  }
  return seq;
}

}  // namespace mdcn
