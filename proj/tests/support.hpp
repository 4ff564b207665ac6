#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "mdcn/rng.hpp"
#include "mdcn/tensor.hpp"

namespace testsup {

template <typename S>
mdcn::Tensor<S> random_tensor(mdcn::RandomEngine& rng, int64_t n, int64_t c, int64_t h,
                              int64_t w, double lo = -1.0, double hi = 1.0) {
  mdcn::Tensor<S> t(n, c, h, w);
  for (S& v : t.data()) v = static_cast<S>(rng.uniform(lo, hi));
  return t;
}

inline double dot(const mdcn::TensorD& a, const mdcn::TensorD& b) {
  double s = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) s += a.data()[size_t(i)] * b.data()[size_t(i)];
  return s;
}

struct FdReport {
  double max_rel = 0.0;
  double max_abs = 0.0;
  int64_t worst_index = -1;
};

/// Central-difference check of analytic derivatives. `slots` point into
/// whatever storage `loss` reads (inputs or parameters); each slot is
/// perturbed by +-h and the quotient compared against `analytic`.
/// Relative error uses a floored denominator so near-zero gradients are
/// judged absolutely.
inline FdReport check_gradient(const std::function<double()>& loss,
                               const std::vector<double*>& slots,
                               const std::vector<double>& analytic, double h = 1e-5) {
  FdReport rep;
  for (size_t i = 0; i < slots.size(); ++i) {
    const double saved = *slots[i];
    *slots[i] = saved + h;
    const double up = loss();
    *slots[i] = saved - h;
    const double down = loss();
    *slots[i] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double abs_err = std::abs(fd - analytic[i]);
    const double rel = abs_err / std::max({1e-2, std::abs(fd), std::abs(analytic[i])});
    if (rel > rep.max_rel) {
      rep.max_rel = rel;
      rep.worst_index = static_cast<int64_t>(i);
    }
    rep.max_abs = std::max(rep.max_abs, abs_err);
  }
  return rep;
}

inline std::vector<double*> tensor_slots(mdcn::TensorD& t) {
  std::vector<double*> out;
  out.reserve(size_t(t.numel()));
  for (auto& v : t.data()) out.push_back(&v);
  return out;
}

inline std::vector<double*> vector_slots(std::vector<double>& v) {
  std::vector<double*> out;
  out.reserve(v.size());
  for (auto& x : v) out.push_back(&x);
  return out;
}

}  // namespace testsup
