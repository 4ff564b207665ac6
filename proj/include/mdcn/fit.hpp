#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mdcn/dataset.hpp"
#include "mdcn/net.hpp"
#include "mdcn/optim.hpp"
#include "mdcn/rng.hpp"

namespace mdcn {

struct TrainConfig {
  AdamConfig adam;
  int64_t batch_size = 16;
  int64_t max_iters = 0;
  Loss loss_kind = Loss::L1;
  uint64_t seed = 0;
  double clip_norm = 0.0;        // gradient max-norm; 0 disables clipping
  int64_t record_every = 100;    // loss history granularity
  int64_t checkpoint_every = 0;  // 0 means final checkpoint only
};

struct LossRecord {
  int64_t iter = 0;  // 1-based, the step just completed
  double lr = 0.0;
  double loss = 0.0;
};

struct FitResult {
  std::vector<LossRecord> history;
  int64_t completed_iters = 0;
  bool aborted = false;
  std::string abort_reason;
};

/// Draws one aligned LR/HR batch. LR channel count must match the model.
using BatchFn = std::function<PatchBatch(RandomEngine&)>;

/// Called with the current parameters after selected iterations.
using SnapshotFn = std::function<void(const ModelParams<float>&, int64_t iter)>;

/// Adam training against the scale-recurrent forward pass for `sr_factor`.
/// A non-finite loss or gradient aborts the run before the parameters are
/// touched, so the model always holds the last finite state. Identical
/// configs and seeds reproduce the loss history exactly.
FitResult fit(ModelParams<float>& model, const BatchFn& next_batch,
              const TrainConfig& cfg, int64_t sr_factor,
              const SnapshotFn& on_snapshot = {});

/// Plain-text "iter  lr  loss" table of a training run.
std::string loss_table(const std::vector<LossRecord>& history);

}  // namespace mdcn
