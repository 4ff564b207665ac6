#include "mdcn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <sstream>

#include "mdcn/dataset.hpp"
#include "mdcn/errors.hpp"
#include "mdcn/parallel.hpp"

namespace mdcn {

namespace {

constexpr int64_t kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

// Cropped luma plane on the 255 scale, row-major (rows x cols).
struct Plane {
  std::vector<double> v;
  int64_t rows = 0, cols = 0;
  double at(int64_t r, int64_t c) const { return v[r * cols + c]; }
};

Plane luma_cropped(const ImageRGB& img, int64_t crop) {
  const std::vector<float> y = rgb_to_y(img);
  Plane p;
  p.rows = img.height - 2 * crop;
  p.cols = img.width - 2 * crop;
  if (p.rows < 1 || p.cols < 1) {
    throw ShapeError("crop of " + std::to_string(crop) +
                     " leaves no pixels in " + std::to_string(img.height) +
                     "x" + std::to_string(img.width) + " image");
  }
  p.v.resize(static_cast<size_t>(p.rows * p.cols));
  for (int64_t r = 0; r < p.rows; ++r) {
    for (int64_t c = 0; c < p.cols; ++c) {
      p.v[r * p.cols + c] =
          255.0 * static_cast<double>(y[(r + crop) * img.width + (c + crop)]);
    }
  }
  return p;
}

void check_pair(const ImageRGB& sr, const ImageRGB& hr, int64_t crop) {
  if (!sr.same_size(hr)) {
    throw ShapeError("metric inputs differ in size: " +
                     std::to_string(sr.height) + "x" + std::to_string(sr.width) +
                     " vs " + std::to_string(hr.height) + "x" +
                     std::to_string(hr.width));
  }
  if (crop < 0) throw ConfigError("negative crop");
}

std::vector<double> gaussian_window() {
  std::vector<double> w(kWin * kWin);
  const int64_t half = kWin / 2;
  double sum = 0.0;
  for (int64_t r = 0; r < kWin; ++r) {
    for (int64_t c = 0; c < kWin; ++c) {
      const double dr = static_cast<double>(r - half);
      const double dc = static_cast<double>(c - half);
      w[r * kWin + c] = std::exp(-(dr * dr + dc * dc) / (2.0 * kSigma * kSigma));
      sum += w[r * kWin + c];
    }
  }
  for (double& x : w) x /= sum;
  return w;
}

}  // namespace

double psnr_y(const ImageRGB& sr, const ImageRGB& hr, int64_t crop) {
  check_pair(sr, hr, crop);
  const Plane a = luma_cropped(sr, crop);
  const Plane b = luma_cropped(hr, crop);
  double se = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i) {
    const double d = a.v[i] - b.v[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.v.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double ssim_y(const ImageRGB& sr, const ImageRGB& hr, int64_t crop) {
  check_pair(sr, hr, crop);
  const Plane a = luma_cropped(sr, crop);
  const Plane b = luma_cropped(hr, crop);
  if (a.rows < kWin || a.cols < kWin) {
    throw ShapeError("image too small for an 11x11 SSIM window after crop");
  }
  static const std::vector<double> w = gaussian_window();

  double total = 0.0;
  int64_t count = 0;
  for (int64_t r = 0; r + kWin <= a.rows; ++r) {
    for (int64_t c = 0; c + kWin <= a.cols; ++c) {
      double mx = 0.0, my = 0.0, xx = 0.0, yy = 0.0, xy = 0.0;
      for (int64_t i = 0; i < kWin; ++i) {
        for (int64_t j = 0; j < kWin; ++j) {
          const double wij = w[i * kWin + j];
          const double x = a.at(r + i, c + j);
          const double y = b.at(r + i, c + j);
          mx += wij * x;
          my += wij * y;
          xx += wij * x * x;
          yy += wij * y * y;
          xy += wij * x * y;
        }
      }
      const double vx = xx - mx * mx;
      const double vy = yy - my * my;
      const double cxy = xy - mx * my;
      const double num = (2.0 * mx * my + kC1) * (2.0 * cxy + kC2);
      const double den = (mx * mx + my * my + kC1) * (vx + vy + kC2);
      total += num / den;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

void quantize_8bit(ImageRGB& img) {
  for (float& v : img.pixels) {
    const float c = std::clamp(v, 0.0f, 1.0f);
    v = std::round(c * 255.0f) / 255.0f;
  }
}

ImageRGB self_ensemble(const SrFn& forward, const ImageRGB& lr) {
  std::vector<double> acc;
  ImageRGB shape_ref;
  for (int k = 0; k < 8; ++k) {
    ImageRGB out = dihedral_unapply(forward(dihedral_apply(lr, k)), k);
    if (k == 0) {
      shape_ref = out;
      acc.assign(out.pixels.size(), 0.0);
    } else if (!out.same_size(shape_ref)) {
      throw ShapeError("self-ensemble branches disagree on output size");
    }
    for (size_t i = 0; i < out.pixels.size(); ++i) {
      acc[i] += static_cast<double>(out.pixels[i]);
    }
  }
  for (size_t i = 0; i < acc.size(); ++i) {
    shape_ref.pixels[i] = static_cast<float>(acc[i] / 8.0);
  }
  return shape_ref;
}

namespace {

std::string fmt_metric(double v, int prec) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

}  // namespace

std::string EvalReport::to_text() const {
  size_t name_w = 7;
  for (const auto& r : rows) name_w = std::max(name_w, r.name.size());
  std::ostringstream os;
  os << std::left;
  os.width(static_cast<std::streamsize>(name_w + 2));
  os << "image";
  os << "  PSNR(dB)    SSIM\n";
  auto line = [&](const std::string& name, double p, double s) {
    os.width(static_cast<std::streamsize>(name_w + 2));
    os << name;
    os << "  ";
    os.width(8);
    os << std::right << fmt_metric(p, 3) << "  ";
    os.width(6);
    os << fmt_metric(s, 4) << "\n" << std::left;
  };
  for (const auto& r : rows) line(r.name, r.psnr, r.ssim);
  line("average", avg_psnr, avg_ssim);
  if (inf_rows > 0) {
    os << "note: " << inf_rows
       << " image(s) scored infinite PSNR and are excluded from the average\n";
  }
  for (const auto& w : warnings) os << "warning: " << w << "\n";
  return os.str();
}

std::string EvalReport::to_csv() const {
  std::ostringstream os;
  os << "image,psnr_db,ssim\n";
  for (const auto& r : rows) {
    os << r.name << "," << fmt_metric(r.psnr, 6) << "," << fmt_metric(r.ssim, 6)
       << "\n";
  }
  os << "average," << fmt_metric(avg_psnr, 6) << "," << fmt_metric(avg_ssim, 6)
     << "\n";
  return os.str();
}

EvalReport evaluate_dataset(const SrFn& sr, const std::string& hr_dir,
                            const EvalOptions& opt) {
  if (opt.scale != 1 && opt.scale != 2 && opt.scale != 3 && opt.scale != 4 &&
      opt.scale != 8) {
    throw ConfigError("unsupported evaluation scale " +
                      std::to_string(opt.scale));
  }
  const auto paths = list_pngs(hr_dir);
  if (paths.empty()) {
    throw ConfigError("no PNG images found in " + hr_dir);
  }
  const int64_t crop = opt.crop >= 0 ? opt.crop : opt.scale;

  struct Slot {
    bool ok = false;
    ImagePairScore score;
    std::string warning;
  };
  std::vector<Slot> slots(paths.size());
  parallel_for(static_cast<int64_t>(paths.size()), [&](int64_t i) {
    Slot& slot = slots[static_cast<size_t>(i)];
    const std::string name =
        std::filesystem::path(paths[static_cast<size_t>(i)]).filename().string();
    ImageRGB hr;
    try {
      hr = load_png(paths[static_cast<size_t>(i)]);
    } catch (const IoError& e) {
      slot.warning = "skipped unreadable image " + name + ": " + e.what();
      return;
    }
    ImageRGB lr, truth;
    if (opt.scale == 1) {
      lr = hr;
      truth = hr;
    } else {
      DegradePair p = degrade(hr, opt.scale);
      lr = std::move(p.lr);
      truth = std::move(p.hr);
    }
    ImageRGB out = sr(lr);
    if (opt.quantize) quantize_8bit(out);
    slot.score.name = name;
    slot.score.psnr = psnr_y(out, truth, crop);
    slot.score.ssim = ssim_y(out, truth, crop);
    slot.ok = true;
  });

  EvalReport report;
  report.scale = opt.scale;
  double psum = 0.0, ssum = 0.0;
  int64_t finite = 0;
  for (const auto& slot : slots) {
    if (!slot.warning.empty()) report.warnings.push_back(slot.warning);
    if (!slot.ok) continue;
    report.rows.push_back(slot.score);
    ssum += slot.score.ssim;
    if (std::isinf(slot.score.psnr)) {
      ++report.inf_rows;
    } else {
      psum += slot.score.psnr;
      ++finite;
    }
  }
  if (report.rows.empty()) {
    throw ConfigError("no scorable images in " + hr_dir);
  }
  report.avg_ssim = ssum / static_cast<double>(report.rows.size());
  report.avg_psnr = finite > 0 ? psum / static_cast<double>(finite)
                               : std::numeric_limits<double>::infinity();
  return report;
}

}  // namespace mdcn
