#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mdcn/net.hpp"
#include "mdcn/tensor.hpp"

namespace mdcn {

enum class Loss { L1, L2 };

inline Loss parse_loss(const std::string& s) {
  if (s == "l1") return Loss::L1;
  if (s == "l2") return Loss::L2;
  throw ConfigError("loss must be \"l1\" or \"l2\", got \"" + s + "\"");
}

inline const char* loss_name(Loss l) { return l == Loss::L1 ? "l1" : "l2"; }

template <typename S>
struct PixelLoss {
  double value;
  Tensor<S> grad;  // d(loss)/d(pred)
};

/// Mean absolute or mean squared error over all elements. The L1
/// subgradient is sign(pred-target), zero at exact ties.
template <typename S>
PixelLoss<S> pixel_loss(const Tensor<S>& pred, const Tensor<S>& target, Loss kind) {
  require_same_shape(pred, target, "pixel_loss");
  const int64_t n = pred.numel();
  if (n == 0) throw ShapeError("pixel_loss: empty tensors");
  PixelLoss<S> out{0.0, Tensor<S>(pred.n(), pred.c(), pred.h(), pred.w())};
  const S* p = pred.data().data();
  const S* t = target.data().data();
  S* g = out.grad.data().data();
  const double inv = 1.0 / static_cast<double>(n);
  double acc = 0.0;
  if (kind == Loss::L1) {
    for (int64_t i = 0; i < n; ++i) {
      const double d = double(p[i]) - double(t[i]);
      acc += std::abs(d);
      g[i] = static_cast<S>(d > 0 ? inv : (d < 0 ? -inv : 0.0));
    }
  } else {
    for (int64_t i = 0; i < n; ++i) {
      const double d = double(p[i]) - double(t[i]);
      acc += d * d;
      g[i] = static_cast<S>(2.0 * d * inv);
    }
  }
  out.value = acc * inv;
  return out;
}

/// Step-decay schedule: the rate halves after every `halve_every`
/// iterations. `iter` is the 0-based index of the step being taken.
inline double lr_at(double lr0, int64_t iter, int64_t halve_every) {
  if (halve_every <= 0) throw ConfigError("lr schedule: halve_every must be positive");
  if (iter < 0) throw ConfigError("lr schedule: negative iteration index");
  return lr0 * std::pow(0.5, double(iter / halve_every));
}

struct AdamConfig {
  double lr0 = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t halve_every = 200000;
};

// Collects (name, array) pairs in the fixed visit order so two models
// can be walked in lockstep.
template <typename S>
std::vector<std::pair<std::string, std::vector<S>*>> param_arrays(ModelParams<S>& m) {
  std::vector<std::pair<std::string, std::vector<S>*>> out;
  m.visit([&out](const std::string& name, std::vector<S>& flat, const Shape4&) {
    out.emplace_back(name, &flat);
  });
  return out;
}

template <typename S>
struct AdamState {
  int64_t step = 0;  // completed steps; also the bias-correction exponent
  std::vector<std::vector<double>> m, v;

  static AdamState like(ModelParams<S>& params) {
    AdamState st;
    for (auto& [name, arr] : param_arrays(params)) {
      st.m.emplace_back(arr->size(), 0.0);
      st.v.emplace_back(arr->size(), 0.0);
    }
    return st;
  }
};

template <typename S>
void zero_grads(ModelParams<S>& grads) {
  grads.visit([](const std::string&, std::vector<S>& flat, const Shape4&) {
    std::fill(flat.begin(), flat.end(), S(0));
  });
}

/// Scales all gradients by max_norm/norm when the global L2 norm exceeds
/// max_norm; returns the pre-clip norm. max_norm <= 0 disables clipping.
template <typename S>
double clip_grad_norm(ModelParams<S>& grads, double max_norm) {
  double sq = 0.0;
  for (auto& [name, arr] : param_arrays(grads))
    for (S v : *arr) sq += double(v) * double(v);
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& [name, arr] : param_arrays(grads))
      for (S& v : *arr) v = static_cast<S>(double(v) * scale);
  }
  return norm;
}

/// One Adam update with bias correction; moments are kept in double.
/// The epsilon sits outside the square root: p -= lr * m^ / (sqrt(v^) + eps).
/// A non-finite gradient anywhere aborts before any parameter changes.
template <typename S>
void adam_step(ModelParams<S>& params, ModelParams<S>& grads, AdamState<S>& state,
               const AdamConfig& cfg, double lr) {
  auto ps = param_arrays(params);
  auto gs = param_arrays(grads);
  if (ps.size() != gs.size() || ps.size() != state.m.size())
    throw ShapeError("adam_step: parameter/gradient/state layouts disagree");
  for (size_t k = 0; k < ps.size(); ++k) {
    if (ps[k].second->size() != gs[k].second->size())
      throw ShapeError("adam_step: size mismatch for " + ps[k].first);
    for (S g : *gs[k].second)
      if (!std::isfinite(double(g)))
        throw NumericError("non-finite gradient in " + ps[k].first);
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, double(state.step));
  for (size_t k = 0; k < ps.size(); ++k) {
    std::vector<S>& p = *ps[k].second;
    const std::vector<S>& g = *gs[k].second;
    std::vector<double>& m = state.m[k];
    std::vector<double>& v = state.v[k];
    for (size_t i = 0; i < p.size(); ++i) {
      const double gi = double(g[i]);
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] = static_cast<S>(double(p[i]) - lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
  }
}

}  // namespace mdcn
