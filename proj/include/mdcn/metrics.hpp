#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mdcn/image.hpp"

namespace mdcn {

/// PSNR between the luma planes on the 255 scale, after cropping `crop`
/// pixels from every border. Returns +inf for identical crops.
double psnr_y(const ImageRGB& sr, const ImageRGB& hr, int64_t crop);

/// Mean structural similarity of the luma planes over all valid (fully
/// interior) 11x11 Gaussian windows, sigma 1.5, K1=0.01, K2=0.03, L=255.
double ssim_y(const ImageRGB& sr, const ImageRGB& hr, int64_t crop);

/// Rounds to the nearest 8-bit level in place, the same values a PNG save
/// would produce. Metrics quote quantized outputs unless told otherwise.
void quantize_8bit(ImageRGB& img);

using SrFn = std::function<ImageRGB(const ImageRGB&)>;

/// Geometric self-ensemble: average of T_k^{-1}(forward(T_k(lr))) over the
/// eight dihedral transforms, accumulated in double precision.
ImageRGB self_ensemble(const SrFn& forward, const ImageRGB& lr);

struct ImagePairScore {
  std::string name;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct EvalReport {
  int64_t scale = 0;
  std::vector<ImagePairScore> rows;
  std::vector<std::string> warnings;
  double avg_psnr = 0.0;  // over rows with finite PSNR
  double avg_ssim = 0.0;
  int64_t inf_rows = 0;

  std::string to_text() const;
  std::string to_csv() const;
};

struct EvalOptions {
  int64_t scale = 2;
  bool quantize = true;   // 8-bit round SR output before scoring
  int64_t crop = -1;      // border crop in pixels; -1 means crop = scale
};

/// Degrades every PNG under hr_dir by `scale`, reconstructs it with `sr`,
/// and scores Y-PSNR / Y-SSIM against the cropped ground truth. Images are
/// visited in lexicographic order; unreadable files are skipped with a
/// warning. scale == 1 is a diagnostic mode that feeds the ground truth
/// straight through. Scoring runs per-image across worker threads.
EvalReport evaluate_dataset(const SrFn& sr, const std::string& hr_dir,
                            const EvalOptions& opt);

}  // namespace mdcn
