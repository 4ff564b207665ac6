#include "mdcn/fit.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "mdcn/errors.hpp"

namespace mdcn {

FitResult fit(ModelParams<float>& model, const BatchFn& next_batch,
              const TrainConfig& cfg, int64_t sr_factor,
              const SnapshotFn& on_snapshot) {
  if (cfg.max_iters < 0) throw ConfigError("max_iters must be non-negative");
  if (cfg.record_every < 1) throw ConfigError("record_every must be positive");
  model.check_shapes();
  passes_for_factor(model.config, sr_factor);  // validate compatibility early

  FitResult result;
  RandomEngine rng(cfg.seed);
  ModelParams<float> grads = ModelParams<float>::zeros_like(model);
  AdamState<float> state = AdamState<float>::like(model);

  for (int64_t iter = 0; iter < cfg.max_iters; ++iter) {
    PatchBatch batch = next_batch(rng);
    SrTape<float> tape;
    TensorF out = sr_forward_training(batch.lr, model, sr_factor, tape);
    PixelLoss<float> loss = pixel_loss(out, batch.hr, cfg.loss_kind);
    if (!std::isfinite(loss.value)) {
      result.aborted = true;
      result.abort_reason =
          "non-finite loss at iteration " + std::to_string(iter + 1);
      break;
    }
    zero_grads(grads);
    sr_backward_training(loss.grad, tape, model, grads);
    if (cfg.clip_norm > 0.0) clip_grad_norm(grads, cfg.clip_norm);
    const double lr = lr_at(cfg.adam.lr0, iter, cfg.adam.halve_every);
    try {
      adam_step(model, grads, state, cfg.adam, lr);
    } catch (const NumericError& e) {
      result.aborted = true;
      result.abort_reason = std::string(e.what()) + " at iteration " +
                            std::to_string(iter + 1);
      break;
    }
    result.completed_iters = iter + 1;
    const bool last = iter + 1 == cfg.max_iters;
    if ((iter + 1) % cfg.record_every == 0 || last || iter == 0) {
      result.history.push_back({iter + 1, lr, loss.value});
    }
    if (on_snapshot && ((cfg.checkpoint_every > 0 &&
                         (iter + 1) % cfg.checkpoint_every == 0) ||
                        last)) {
      on_snapshot(model, iter + 1);
    }
  }
  if (cfg.max_iters == 0 && on_snapshot) on_snapshot(model, 0);
  return result;
}

std::string loss_table(const std::vector<LossRecord>& history) {
  std::ostringstream os;
  os << "iter        lr          loss\n";
  char buf[96];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof(buf), "%-10lld  %-10.4g  %.8g\n",
                  static_cast<long long>(r.iter), r.lr, r.loss);
    os << buf;
  }
  return os.str();
}

}  // namespace mdcn
