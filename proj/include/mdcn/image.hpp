#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mdcn/tensor.hpp"

namespace mdcn {

/// Planar RGB image: 3 channel planes of height x width floats in [0,1],
/// laid out like a 3xHxW tensor slab.
struct ImageRGB {
  int64_t height = 0, width = 0;
  std::vector<float> pixels;

  ImageRGB() = default;
  ImageRGB(int64_t h, int64_t w)
      : height(h), width(w), pixels(static_cast<size_t>(3 * h * w), 0.0f) {
    if (h < 0 || w < 0) throw ShapeError("image extent negative");
  }

  float& at(int64_t c, int64_t h, int64_t w) {
    return pixels[static_cast<size_t>((c * height + h) * width + w)];
  }
  float at(int64_t c, int64_t h, int64_t w) const {
    return pixels[static_cast<size_t>((c * height + h) * width + w)];
  }
  bool same_size(const ImageRGB& o) const { return height == o.height && width == o.width; }
};

/// Decodes an 8-bit PNG (grayscale/palette/alpha variants are normalized
/// to RGB, 16-bit is reduced); values scaled to [0,1].
ImageRGB load_png(const std::string& path);

/// Writes 8-bit RGB; values are clamped and quantized as round(v*255).
void save_png(const std::string& path, const ImageRGB& img);

TensorF to_tensor(const ImageRGB& img);  // 1x3xHxW
ImageRGB from_tensor(const TensorF& t, bool clamp01 = true);

/// Keys cubic convolution kernel with a = -0.5: W(0)=1, W(1)=W(2)=0,
/// W(0.5)=0.5625, support (-2,2).
double cubic_kernel(double x);

/// Separable cubic resampling matching the reference resizer used across
/// the SR literature: half-pixel centers, edge clamping, and (when
/// downscaling with antialias on) the kernel stretched by the inverse
/// scale. Output clamped to [0,1].
ImageRGB bicubic_resize(const ImageRGB& img, int64_t out_h, int64_t out_w,
                        bool antialias = true);

struct DegradePair {
  ImageRGB lr;
  ImageRGB hr;  // cropped to dimensions divisible by the scale
};

/// Crops HR to a multiple of s (top-left anchored), then downsamples by
/// 1/s, so HR block [s*y, s*y+s) x [s*x, s*x+s) corresponds to LR (y, x).
DegradePair degrade(const ImageRGB& hr, int64_t s);

/// BT.601 studio-swing luma, kept on the [0,1] scale: for RGB in [0,1],
/// Y = (65.481 R + 128.553 G + 24.966 B + 16) / 255, range [16/255, 235/255].
std::vector<float> rgb_to_y(const ImageRGB& img);

// ---- dihedral transforms -----------------------------------------------------
// k in [0,8) encodes flip-then-rotate: horizontal flip if k >= 4, then
// (k % 4) quarter-turn counterclockwise rotations. dihedral_unapply(_, k)
// is the exact inverse of dihedral_apply(_, k).

template <typename S>
Tensor<S> rotate90_ccw(const Tensor<S>& x) {
  Tensor<S> out(x.n(), x.c(), x.w(), x.h());
  for (int64_t n = 0; n < x.n(); ++n)
    for (int64_t c = 0; c < x.c(); ++c) {
      const S* ip = x.plane(n, c);
      S* op = out.plane(n, c);
      for (int64_t h = 0; h < out.h(); ++h)
        for (int64_t w = 0; w < out.w(); ++w)
          op[h * out.w() + w] = ip[w * x.w() + (x.w() - 1 - h)];
    }
  return out;
}

template <typename S>
Tensor<S> flip_horizontal(const Tensor<S>& x) {
  Tensor<S> out(x.shape());
  for (int64_t n = 0; n < x.n(); ++n)
    for (int64_t c = 0; c < x.c(); ++c) {
      const S* ip = x.plane(n, c);
      S* op = out.plane(n, c);
      for (int64_t h = 0; h < x.h(); ++h)
        for (int64_t w = 0; w < x.w(); ++w)
          op[h * x.w() + w] = ip[h * x.w() + (x.w() - 1 - w)];
    }
  return out;
}

template <typename S>
Tensor<S> dihedral_apply(const Tensor<S>& x, int k) {
  if (k < 0 || k >= 8) throw ConfigError("dihedral index must be in [0,8)");
  Tensor<S> out = (k >= 4) ? flip_horizontal(x) : x;
  for (int r = 0; r < k % 4; ++r) out = rotate90_ccw(out);
  return out;
}

template <typename S>
Tensor<S> dihedral_unapply(const Tensor<S>& y, int k) {
  if (k < 0 || k >= 8) throw ConfigError("dihedral index must be in [0,8)");
  Tensor<S> out = y;
  for (int r = 0; r < (4 - k % 4) % 4; ++r) out = rotate90_ccw(out);
  if (k >= 4) out = flip_horizontal(out);
  return out;
}

ImageRGB dihedral_apply(const ImageRGB& img, int k);
ImageRGB dihedral_unapply(const ImageRGB& img, int k);

}  // namespace mdcn
