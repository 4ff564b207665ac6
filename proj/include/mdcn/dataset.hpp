#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mdcn/image.hpp"
#include "mdcn/rng.hpp"
#include "mdcn/tensor.hpp"

namespace mdcn {

struct DatasetSpec {
  std::string hr_dir;
  int64_t scale = 2;
  int64_t patch_size = 32;  // LR-space patch edge
  bool augment = true;
  bool subtract_mean = false;  // center batches on the dataset channel means
};

struct PatchBatch {
  TensorF lr;
  TensorF hr;
};

/// Sorted PNG paths directly inside `dir` (lexicographic, deterministic).
std::vector<std::string> list_pngs(const std::string& dir);

/// Pre-degraded training corpus. Every HR image is cropped and downscaled
/// ONCE at load time; patches are later cut from these aligned full-image
/// pairs, never degraded individually.
class PatchDataset {
 public:
  explicit PatchDataset(const DatasetSpec& spec);

  size_t size() const { return pairs_.size(); }
  const DegradePair& pair(size_t i) const { return pairs_[i]; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  const std::array<float, 3>& channel_means() const { return means_; }

  /// batch_size aligned patch pairs: LR Nx3xPxP at (y, x), HR Nx3xsPxsP at
  /// (s*y, s*x). With augmentation on, one of the 8 dihedral transforms is
  /// drawn per pair and applied to both members.
  PatchBatch sample_batch(int64_t batch_size, RandomEngine& rng) const;

 private:
  DatasetSpec spec_;
  std::vector<DegradePair> pairs_;
  std::vector<std::string> warnings_;
  std::array<float, 3> means_{0.0f, 0.0f, 0.0f};
};

}  // namespace mdcn
