#include "mdcn/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "mdcn/errors.hpp"

namespace mdcn {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

ImageRGB load_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path);

  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw IoError("not a PNG file: " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialization failed");
  }

  // Everything the longjmp path can skip over is allocated up front.
  std::vector<unsigned char> interleaved;
  std::vector<png_bytep> rows;
  int64_t height = 0, width = 0;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("failed to decode " + path);
  }

  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);

  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  if (png_get_rowbytes(png, info) != static_cast<size_t>(width) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("unexpected row layout in " + path);
  }

  interleaved.resize(static_cast<size_t>(height) * static_cast<size_t>(width) * 3);
  rows.resize(static_cast<size_t>(height));
  for (int64_t h = 0; h < height; ++h)
    rows[static_cast<size_t>(h)] = interleaved.data() + h * width * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  ImageRGB img(height, width);
  for (int64_t h = 0; h < height; ++h)
    for (int64_t w = 0; w < width; ++w) {
      const unsigned char* px = &interleaved[static_cast<size_t>((h * width + w) * 3)];
      for (int64_t c = 0; c < 3; ++c) img.at(c, h, w) = float(px[c]) / 255.0f;
    }
  return img;
}

void save_png(const std::string& path, const ImageRGB& img) {
  if (img.height < 1 || img.width < 1) throw ShapeError("cannot save empty image");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot write " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialization failed");
  }

  std::vector<unsigned char> interleaved(
      static_cast<size_t>(img.height) * static_cast<size_t>(img.width) * 3);
  std::vector<png_bytep> rows(static_cast<size_t>(img.height));
  for (int64_t h = 0; h < img.height; ++h)
    for (int64_t w = 0; w < img.width; ++w)
      for (int64_t c = 0; c < 3; ++c) {
        float v = std::min(1.0f, std::max(0.0f, img.at(c, h, w)));
        interleaved[static_cast<size_t>((h * img.width + w) * 3 + c)] =
            static_cast<unsigned char>(std::lround(v * 255.0f));
      }
  for (int64_t h = 0; h < img.height; ++h)
    rows[static_cast<size_t>(h)] = interleaved.data() + h * img.width * 3;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed to encode " + path);
  }

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

TensorF to_tensor(const ImageRGB& img) {
  TensorF t(1, 3, img.height, img.width);
  std::copy(img.pixels.begin(), img.pixels.end(), t.data().begin());
  return t;
}

ImageRGB from_tensor(const TensorF& t, bool clamp01) {
  if (t.n() != 1 || t.c() != 3)
    throw ShapeError("from_tensor expects 1x3xHxW, got " + shape_str(t.shape()));
  ImageRGB img(t.h(), t.w());
  if (clamp01) {
    for (size_t i = 0; i < img.pixels.size(); ++i)
      img.pixels[i] = std::min(1.0f, std::max(0.0f, t.data()[i]));
  } else {
    std::copy(t.data().begin(), t.data().end(), img.pixels.begin());
  }
  return img;
}

double cubic_kernel(double x) {
  const double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return (a + 2.0) * x * x * x - (a + 3.0) * x * x + 1.0;
  if (x < 2.0) return a * x * x * x - 5.0 * a * x * x + 8.0 * a * x - 4.0 * a;
  return 0.0;
}

namespace {

// Per-output-sample source indices and normalized weights for one axis.
struct AxisContrib {
  int64_t taps;
  std::vector<int64_t> idx;  // n_out * taps, edge-clamped
  std::vector<double> wgt;   // n_out * taps, rows sum to 1
};

AxisContrib build_contrib(int64_t n_in, int64_t n_out, bool antialias) {
  const double scale = double(n_out) / double(n_in);
  // Downscaling stretches the kernel by 1/scale so it averages (antialias);
  // upscaling always uses the plain kernel.
  const double ks = (scale < 1.0 && antialias) ? scale : 1.0;
  const double kwidth = 4.0 / ks;
  const int64_t taps = static_cast<int64_t>(std::ceil(kwidth)) + 2;

  AxisContrib c;
  c.taps = taps;
  c.idx.resize(static_cast<size_t>(n_out * taps));
  c.wgt.resize(static_cast<size_t>(n_out * taps));
  for (int64_t i = 0; i < n_out; ++i) {
    // Half-pixel-center mapping between the two grids.
    const double u = (double(i) + 0.5) / scale - 0.5;
    const int64_t left = static_cast<int64_t>(std::floor(u - kwidth / 2.0));
    double sum = 0.0;
    for (int64_t j = 0; j < taps; ++j) {
      const double w = ks * cubic_kernel(ks * (u - double(left + j)));
      c.wgt[static_cast<size_t>(i * taps + j)] = w;
      sum += w;
    }
    for (int64_t j = 0; j < taps; ++j) {
      c.wgt[static_cast<size_t>(i * taps + j)] /= sum;
      c.idx[static_cast<size_t>(i * taps + j)] =
          std::clamp<int64_t>(left + j, 0, n_in - 1);
    }
  }
  return c;
}

}  // namespace

ImageRGB bicubic_resize(const ImageRGB& img, int64_t out_h, int64_t out_w, bool antialias) {
  if (out_h < 1 || out_w < 1) throw ShapeError("bicubic_resize: output size must be >= 1");
  if (img.height < 1 || img.width < 1) throw ShapeError("bicubic_resize: empty input");

  const AxisContrib ch = build_contrib(img.height, out_h, antialias);
  const AxisContrib cw = build_contrib(img.width, out_w, antialias);

  // Vertical pass into a double buffer, then horizontal pass with clamping.
  std::vector<double> tmp(static_cast<size_t>(3 * out_h * img.width));
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t h = 0; h < out_h; ++h)
      for (int64_t w = 0; w < img.width; ++w) {
        double acc = 0.0;
        for (int64_t j = 0; j < ch.taps; ++j)
          acc += ch.wgt[static_cast<size_t>(h * ch.taps + j)] *
                 double(img.at(c, ch.idx[static_cast<size_t>(h * ch.taps + j)], w));
        tmp[static_cast<size_t>((c * out_h + h) * img.width + w)] = acc;
      }

  ImageRGB out(out_h, out_w);
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t h = 0; h < out_h; ++h) {
      const double* row = &tmp[static_cast<size_t>((c * out_h + h) * img.width)];
      for (int64_t w = 0; w < out_w; ++w) {
        double acc = 0.0;
        for (int64_t j = 0; j < cw.taps; ++j)
          acc += cw.wgt[static_cast<size_t>(w * cw.taps + j)] *
                 row[cw.idx[static_cast<size_t>(w * cw.taps + j)]];
        out.at(c, h, w) = static_cast<float>(std::min(1.0, std::max(0.0, acc)));
      }
    }
  return out;
}

DegradePair degrade(const ImageRGB& hr, int64_t s) {
  if (s != 2 && s != 3 && s != 4 && s != 8)
    throw ConfigError("degradation scale must be one of {2,3,4,8}");
  if (hr.height < s || hr.width < s)
    throw IoError("image " + std::to_string(hr.height) + "x" + std::to_string(hr.width) +
                  " is smaller than scale " + std::to_string(s));
  const int64_t ch = hr.height - hr.height % s;
  const int64_t cw = hr.width - hr.width % s;
  DegradePair pair;
  pair.hr = ImageRGB(ch, cw);
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t h = 0; h < ch; ++h)
      for (int64_t w = 0; w < cw; ++w) pair.hr.at(c, h, w) = hr.at(c, h, w);
  pair.lr = bicubic_resize(pair.hr, ch / s, cw / s);
  return pair;
}

std::vector<float> rgb_to_y(const ImageRGB& img) {
  std::vector<float> y(static_cast<size_t>(img.height * img.width));
  for (int64_t h = 0; h < img.height; ++h)
    for (int64_t w = 0; w < img.width; ++w) {
      const double v = 65.481 * img.at(0, h, w) + 128.553 * img.at(1, h, w) +
                       24.966 * img.at(2, h, w) + 16.0;
      y[static_cast<size_t>(h * img.width + w)] = static_cast<float>(v / 255.0);
    }
  return y;
}

ImageRGB dihedral_apply(const ImageRGB& img, int k) {
  return from_tensor(dihedral_apply(to_tensor(img), k), false);
}

ImageRGB dihedral_unapply(const ImageRGB& img, int k) {
  return from_tensor(dihedral_unapply(to_tensor(img), k), false);
}

}  // namespace mdcn
