#include "mdcn/video.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <sstream>

#include "mdcn/dataset.hpp"
#include "mdcn/errors.hpp"
#include "mdcn/metrics.hpp"
#include "mdcn/parallel.hpp"

namespace mdcn {

FrameWindow window_at(const std::vector<ImageRGB>& seq, int64_t t) {
  if (seq.empty()) throw ConfigError("window_at: empty sequence");
  const int64_t n = static_cast<int64_t>(seq.size());
  if (t < 0 || t >= n) {
    throw ConfigError("window_at: frame " + std::to_string(t) +
                      " outside sequence of length " + std::to_string(n));
  }
  FrameWindow w;
  for (int64_t k = -2; k <= 2; ++k) {
    w.frames[static_cast<size_t>(k + 2)] =
        seq[static_cast<size_t>(std::clamp<int64_t>(t + k, 0, n - 1))];
  }
  return w;
}

TensorF fuse_frames(const FrameWindow& w) {
  const int64_t h = w.frames[0].height;
  const int64_t wd = w.frames[0].width;
  for (const auto& f : w.frames) {
    if (f.height != h || f.width != wd) {
      throw ShapeError("fuse_frames: frames differ in size");
    }
  }
  TensorF out(1, 15, h, wd);
  for (int64_t t = 0; t < 5; ++t) {
    const ImageRGB& f = w.frames[static_cast<size_t>(t)];
    for (int64_t c = 0; c < 3; ++c) {
      float* dst = out.plane(0, t * 3 + c);
      const float* src = f.pixels.data() + c * h * wd;
      std::copy(src, src + h * wd, dst);
    }
  }
  return out;
}

namespace {

struct ClipResult {
  bool ok = false;
  VideoScore score;
  std::vector<std::string> warnings;
};

ClipResult score_clip(const VideoSrFn& sr, const std::string& dir,
                      const VsrOptions& opt) {
  ClipResult res;
  const std::string name = std::filesystem::path(dir).filename().string();
  std::vector<std::string> paths;
  try {
    paths = list_pngs(dir);
  } catch (const ConfigError& e) {
    res.warnings.push_back("skipped clip " + name + ": " + e.what());
    return res;
  }
  if (paths.empty()) {
    res.warnings.push_back("skipped clip " + name + ": no frames");
    return res;
  }
  std::vector<ImageRGB> hr_frames;
  hr_frames.reserve(paths.size());
  for (const auto& p : paths) {
    try {
      hr_frames.push_back(load_png(p));
    } catch (const IoError& e) {
      res.warnings.push_back("skipped clip " + name + ": unreadable frame " +
                             std::filesystem::path(p).filename().string() +
                             ": " + e.what());
      return res;
    }
  }
  for (size_t i = 1; i < hr_frames.size(); ++i) {
    if (!hr_frames[i].same_size(hr_frames[0])) {
      res.warnings.push_back("skipped clip " + name +
                             ": frames differ in size");
      return res;
    }
  }

  std::vector<ImageRGB> lr, truth;
  lr.reserve(hr_frames.size());
  truth.reserve(hr_frames.size());
  for (const auto& f : hr_frames) {
    DegradePair p = degrade(f, opt.scale);
    lr.push_back(std::move(p.lr));
    truth.push_back(std::move(p.hr));
  }

  const int64_t n =
      std::min<int64_t>(opt.max_frames, static_cast<int64_t>(lr.size()));
  double psum = 0.0, ssum = 0.0;
  int64_t finite = 0, inf_frames = 0;
  for (int64_t t = 0; t < n; ++t) {
    TensorF in = fuse_frames(window_at(lr, t));
    TensorF out = sr(in);
    ImageRGB img = from_tensor(out);
    if (opt.quantize) quantize_8bit(img);
    const double p = psnr_y(img, truth[static_cast<size_t>(t)], opt.crop);
    ssum += ssim_y(img, truth[static_cast<size_t>(t)], opt.crop);
    if (std::isinf(p)) {
      ++inf_frames;
    } else {
      psum += p;
      ++finite;
    }
  }
  res.score.name = name;
  res.score.frames = n;
  res.score.psnr = finite > 0 ? psum / static_cast<double>(finite)
                              : std::numeric_limits<double>::infinity();
  res.score.ssim = ssum / static_cast<double>(n);
  if (inf_frames > 0) {
    res.warnings.push_back(name + ": " + std::to_string(inf_frames) +
                           " frame(s) scored infinite PSNR");
  }
  res.ok = true;
  return res;
}

std::string fmt(double v, int prec) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

}  // namespace

std::string VsrReport::to_text() const {
  size_t name_w = 7;
  for (const auto& r : rows) name_w = std::max(name_w, r.name.size());
  std::ostringstream os;
  os << std::left;
  os.width(static_cast<std::streamsize>(name_w + 2));
  os << "clip";
  os << "  frames  PSNR(dB)    SSIM\n";
  for (const auto& r : rows) {
    os.width(static_cast<std::streamsize>(name_w + 2));
    os << r.name << "  ";
    os << std::right;
    os.width(6);
    os << r.frames << "  ";
    os.width(8);
    os << fmt(r.psnr, 3) << "  ";
    os.width(6);
    os << fmt(r.ssim, 4) << "\n" << std::left;
  }
  for (const auto& w : warnings) os << "warning: " << w << "\n";
  return os.str();
}

std::string VsrReport::to_csv() const {
  std::ostringstream os;
  os << "clip,frames,psnr_db,ssim\n";
  for (const auto& r : rows) {
    os << r.name << "," << r.frames << "," << fmt(r.psnr, 6) << ","
       << fmt(r.ssim, 6) << "\n";
  }
  return os.str();
}

std::vector<std::string> list_clip_dirs(const std::string& root) {
  std::error_code ec;
  if (!std::filesystem::is_directory(root, ec)) {
    throw ConfigError("not a directory: " + root);
  }
  std::vector<std::string> dirs;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (entry.is_directory()) dirs.push_back(entry.path().string());
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

VideoPatchDataset::VideoPatchDataset(const VideoDatasetSpec& spec)
    : spec_(spec) {
  if (spec.patch_size < 1) throw ConfigError("patch_size must be positive");
  for (const auto& dir : list_clip_dirs(spec.clip_root)) {
    const std::string name = std::filesystem::path(dir).filename().string();
    std::vector<std::string> paths;
    try {
      paths = list_pngs(dir);
    } catch (const ConfigError&) {
      continue;
    }
    if (paths.empty()) {
      warnings_.push_back("skipped clip " + name + ": no frames");
      continue;
    }
    Clip clip;
    bool bad = false;
    for (const auto& p : paths) {
      ImageRGB hr;
      try {
        hr = load_png(p);
      } catch (const IoError& e) {
        warnings_.push_back("skipped clip " + name + ": " + e.what());
        bad = true;
        break;
      }
      if (hr.height < spec.scale * spec.patch_size ||
          hr.width < spec.scale * spec.patch_size) {
        warnings_.push_back("skipped clip " + name + ": frames too small");
        bad = true;
        break;
      }
      if (!clip.hr.empty() && !hr.same_size(clip.hr[0])) {
        warnings_.push_back("skipped clip " + name + ": frames differ in size");
        bad = true;
        break;
      }
      DegradePair pair = degrade(hr, spec.scale);
      clip.lr.push_back(std::move(pair.lr));
      clip.hr.push_back(std::move(pair.hr));
    }
    if (!bad) clips_.push_back(std::move(clip));
  }
  if (clips_.empty()) {
    throw ConfigError("no usable clips in " + spec.clip_root);
  }
}

PatchBatch VideoPatchDataset::sample_batch(int64_t batch_size,
                                           RandomEngine& rng) const {
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  const int64_t p = spec_.patch_size;
  const int64_t s = spec_.scale;
  PatchBatch batch;
  batch.lr = TensorF(batch_size, 15, p, p);
  batch.hr = TensorF(batch_size, 3, s * p, s * p);
  for (int64_t n = 0; n < batch_size; ++n) {
    const Clip& clip = clips_[rng.index(clips_.size())];
    const int64_t t = static_cast<int64_t>(rng.index(clip.lr.size()));
    const int64_t y =
        static_cast<int64_t>(rng.index(clip.lr[0].height - p + 1));
    const int64_t x =
        static_cast<int64_t>(rng.index(clip.lr[0].width - p + 1));

    TensorF fused(1, 15, p, p);
    const FrameWindow win = window_at(clip.lr, t);
    for (int64_t f = 0; f < 5; ++f) {
      const ImageRGB& frame = win.frames[static_cast<size_t>(f)];
      for (int64_t c = 0; c < 3; ++c) {
        for (int64_t h = 0; h < p; ++h) {
          for (int64_t w = 0; w < p; ++w) {
            fused(0, f * 3 + c, h, w) = frame.at(c, y + h, x + w);
          }
        }
      }
    }
    TensorF target(1, 3, s * p, s * p);
    const ImageRGB& hr = clip.hr[static_cast<size_t>(t)];
    for (int64_t c = 0; c < 3; ++c) {
      for (int64_t h = 0; h < s * p; ++h) {
        for (int64_t w = 0; w < s * p; ++w) {
          target(0, c, h, w) = hr.at(c, s * y + h, s * x + w);
        }
      }
    }
    if (spec_.augment) {
      const int k = static_cast<int>(rng.index(8));
      fused = dihedral_apply(fused, k);
      target = dihedral_apply(target, k);
    }
    for (int64_t c = 0; c < 15; ++c) {
      std::copy(fused.plane(0, c), fused.plane(0, c) + p * p,
                batch.lr.plane(n, c));
    }
    for (int64_t c = 0; c < 3; ++c) {
      std::copy(target.plane(0, c), target.plane(0, c) + s * p * s * p,
                batch.hr.plane(n, c));
    }
  }
  return batch;
}

VsrReport vsr_evaluate(const VideoSrFn& sr,
                       const std::vector<std::string>& clip_dirs,
                       const VsrOptions& opt) {
  if (clip_dirs.empty()) throw ConfigError("no clip directories given");
  std::vector<ClipResult> results(clip_dirs.size());
  parallel_for(static_cast<int64_t>(clip_dirs.size()), [&](int64_t i) {
    results[static_cast<size_t>(i)] =
        score_clip(sr, clip_dirs[static_cast<size_t>(i)], opt);
  });

  VsrReport report;
  report.scale = opt.scale;
  double psum = 0.0, ssum = 0.0;
  int64_t total_frames = 0, scored = 0;
  for (const auto& r : results) {
    for (const auto& w : r.warnings) report.warnings.push_back(w);
    if (!r.ok) continue;
    report.rows.push_back(r.score);
    if (!std::isinf(r.score.psnr)) {
      psum += r.score.psnr;
      ssum += r.score.ssim;
      ++scored;
    }
    total_frames += r.score.frames;
  }
  if (report.rows.empty()) {
    throw ConfigError("no scorable clips");
  }
  VideoScore avg;
  avg.name = "average";
  avg.frames = total_frames;
  avg.psnr = scored > 0 ? psum / static_cast<double>(scored)
                        : std::numeric_limits<double>::infinity();
  avg.ssim = scored > 0 ? ssum / static_cast<double>(scored) : 1.0;
  report.rows.push_back(avg);
  return report;
}

}  // namespace mdcn
