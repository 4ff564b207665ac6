#include "mdcn/dataset.hpp"

#include <algorithm>
#include <filesystem>

#include "mdcn/errors.hpp"

namespace mdcn {

namespace fs = std::filesystem;

std::vector<std::string> list_pngs(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw ConfigError("not a directory: " + dir);
  }
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") out.push_back(entry.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

PatchDataset::PatchDataset(const DatasetSpec& spec) : spec_(spec) {
  if (spec.patch_size < 1) throw ConfigError("patch_size must be positive");
  const auto paths = list_pngs(spec.hr_dir);
  double sum[3] = {0.0, 0.0, 0.0};
  int64_t count = 0;
  for (const auto& path : paths) {
    ImageRGB hr;
    try {
      hr = load_png(path);
    } catch (const IoError& e) {
      warnings_.push_back("skipped unreadable image " + path + ": " + e.what());
      continue;
    }
    if (hr.height < spec.scale * spec.patch_size ||
        hr.width < spec.scale * spec.patch_size) {
      warnings_.push_back("skipped too-small image " + path);
      continue;
    }
    DegradePair p = degrade(hr, spec.scale);
    const int64_t plane = p.hr.height * p.hr.width;
    for (int64_t c = 0; c < 3; ++c) {
      for (int64_t i = 0; i < plane; ++i) sum[c] += p.hr.pixels[c * plane + i];
    }
    count += plane;
    pairs_.push_back(std::move(p));
  }
  if (pairs_.empty()) {
    throw ConfigError("no usable training images in " + spec.hr_dir);
  }
  for (int64_t c = 0; c < 3; ++c) {
    means_[c] = static_cast<float>(sum[c] / static_cast<double>(count));
  }
}

namespace {

// Copies a P x P window at (y0, x0) of one image into batch slot n.
void copy_patch(TensorF& dst, int64_t n, const ImageRGB& src, int64_t y0,
                int64_t x0, int64_t p) {
  for (int64_t c = 0; c < 3; ++c) {
    for (int64_t h = 0; h < p; ++h) {
      for (int64_t w = 0; w < p; ++w) {
        dst(n, c, h, w) = src.at(c, y0 + h, x0 + w);
      }
    }
  }
}

}  // namespace

PatchBatch PatchDataset::sample_batch(int64_t batch_size,
                                      RandomEngine& rng) const {
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  const int64_t p = spec_.patch_size;
  const int64_t s = spec_.scale;
  PatchBatch batch;
  batch.lr = TensorF(batch_size, 3, p, p);
  batch.hr = TensorF(batch_size, 3, s * p, s * p);
  TensorF one_lr(1, 3, p, p);
  TensorF one_hr(1, 3, s * p, s * p);
  for (int64_t n = 0; n < batch_size; ++n) {
    const DegradePair& img = pairs_[rng.index(pairs_.size())];
    const int64_t y = static_cast<int64_t>(rng.index(img.lr.height - p + 1));
    const int64_t x = static_cast<int64_t>(rng.index(img.lr.width - p + 1));
    copy_patch(one_lr, 0, img.lr, y, x, p);
    for (int64_t c = 0; c < 3; ++c) {
      for (int64_t h = 0; h < s * p; ++h) {
        for (int64_t w = 0; w < s * p; ++w) {
          one_hr(0, c, h, w) = img.hr.at(c, s * y + h, s * x + w);
        }
      }
    }
    TensorF tl = one_lr;
    TensorF th = one_hr;
    if (spec_.augment) {
      const int k = static_cast<int>(rng.index(8));
      tl = dihedral_apply(tl, k);
      th = dihedral_apply(th, k);
    }
    for (int64_t c = 0; c < 3; ++c) {
      for (int64_t h = 0; h < p; ++h) {
        for (int64_t w = 0; w < p; ++w) {
          batch.lr(n, c, h, w) = tl(0, c, h, w);
        }
      }
      for (int64_t h = 0; h < s * p; ++h) {
        for (int64_t w = 0; w < s * p; ++w) {
          batch.hr(n, c, h, w) = th(0, c, h, w);
        }
      }
    }
  }
  if (spec_.subtract_mean) {
    for (int64_t n = 0; n < batch_size; ++n) {
      for (int64_t c = 0; c < 3; ++c) {
        for (int64_t h = 0; h < p; ++h) {
          for (int64_t w = 0; w < p; ++w) batch.lr(n, c, h, w) -= means_[c];
        }
        for (int64_t h = 0; h < s * p; ++h) {
          for (int64_t w = 0; w < s * p; ++w) batch.hr(n, c, h, w) -= means_[c];
        }
      }
    }
  }
  return batch;
}

}  // namespace mdcn
