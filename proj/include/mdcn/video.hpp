#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mdcn/dataset.hpp"
#include "mdcn/image.hpp"
#include "mdcn/rng.hpp"
#include "mdcn/tensor.hpp"

namespace mdcn {

/// Five consecutive frames centered on the target, ordered t-2 .. t+2.
struct FrameWindow {
  std::array<ImageRGB, 5> frames;
};

/// Window centered on frame t with indices clamped to [0, n). At the clip
/// start the window is {0, 0, 0, 1, 2}; the end mirrors that.
FrameWindow window_at(const std::vector<ImageRGB>& seq, int64_t t);

/// Stacks the window into a 1x15xHxW tensor, RGB triples in temporal order,
/// so channels 6..8 hold the center frame.
TensorF fuse_frames(const FrameWindow& w);

using VideoSrFn = std::function<TensorF(const TensorF&)>;  // 1x15xHxW -> 1x3xsHxsW

struct VideoScore {
  std::string name;
  double psnr = 0.0;
  double ssim = 0.0;
  int64_t frames = 0;
};

struct VsrReport {
  int64_t scale = 0;
  std::vector<VideoScore> rows;  // per clip, then one trailing average row
  std::vector<std::string> warnings;
  std::string to_text() const;
  std::string to_csv() const;
};

struct VsrOptions {
  int64_t scale = 4;
  int64_t max_frames = 30;  // leading frames scored per clip
  int64_t crop = 8;
  bool quantize = true;
};

/// Evaluates a video model over clip directories (each holding PNG frames in
/// lexicographic order). Frames are degraded per clip, reconstructed from
/// clamped five-frame windows, and scored on luma. Clips that fail to load
/// are excluded with a warning; per-clip rows precede an "average" row.
VsrReport vsr_evaluate(const VideoSrFn& sr,
                       const std::vector<std::string>& clip_dirs,
                       const VsrOptions& opt);

/// Direct subdirectories of root in lexicographic order (clip layout).
std::vector<std::string> list_clip_dirs(const std::string& root);

struct VideoDatasetSpec {
  std::string clip_root;  // one subdirectory of PNG frames per clip
  int64_t scale = 4;
  int64_t patch_size = 8;  // LR-space patch edge
  bool augment = false;
};

/// Pre-degraded video training corpus. Batches pair a fused five-frame LR
/// window patch (15 channels) with the aligned HR patch of the center frame.
class VideoPatchDataset {
 public:
  explicit VideoPatchDataset(const VideoDatasetSpec& spec);

  size_t size() const { return clips_.size(); }
  const std::vector<std::string>& warnings() const { return warnings_; }

  PatchBatch sample_batch(int64_t batch_size, RandomEngine& rng) const;

 private:
  struct Clip {
    std::vector<ImageRGB> lr;
    std::vector<ImageRGB> hr;
  };
  VideoDatasetSpec spec_;
  std::vector<Clip> clips_;
  std::vector<std::string> warnings_;
};

}  // namespace mdcn
