#pragma once

#include <Eigen/Core>
#include <cmath>
#include <initializer_list>
#include <vector>

#include "mdcn/tensor.hpp"

namespace mdcn {

/// Weights of one convolution layer: weight is Cout x Cin x kh x kw,
/// bias has one entry per output channel. Only 1x1 and 3x3 kernels occur.
template <typename S>
struct ConvParams {
  Tensor<S> weight;
  std::vector<S> bias;

  int64_t cout() const { return weight.n(); }
  int64_t cin() const { return weight.c(); }
  int64_t kh() const { return weight.h(); }
  int64_t kw() const { return weight.w(); }
  // Padding that keeps H and W unchanged: 1 for 3x3, 0 for 1x1.
  int64_t same_pad() const { return (kh() - 1) / 2; }

  static ConvParams make(int64_t cout, int64_t cin, int64_t k) {
    ConvParams p;
    p.weight = Tensor<S>(cout, cin, k, k);
    p.bias.assign(static_cast<size_t>(cout), S(0));
    return p;
  }
};

enum class ConvAlgo { Auto, Direct, Im2col };

template <typename S>
struct ConvGrads {
  Tensor<S> input;
  Tensor<S> weight;
  std::vector<S> bias;
};

namespace detail {

template <typename S>
using MatRM = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
inline void check_conv_args(const Tensor<S>& x, const ConvParams<S>& p, int64_t pad) {
  if (x.c() != p.cin())
    throw ShapeError("conv2d: input channels " + shape_str(x.shape()) +
                     " do not match weight " + shape_str(p.weight.shape()));
  if (p.kh() != p.kw() || (p.kh() != 1 && p.kh() != 3))
    throw ShapeError("conv2d: kernel must be 1x1 or 3x3, got " + shape_str(p.weight.shape()));
  if (static_cast<int64_t>(p.bias.size()) != p.cout())
    throw ShapeError("conv2d: bias length " + std::to_string(p.bias.size()) +
                     " does not match output channels " + std::to_string(p.cout()));
  if (pad < 0) throw ShapeError("conv2d: negative padding");
  if (x.h() + 2 * pad < p.kh() || x.w() + 2 * pad < p.kw())
    throw ShapeError("conv2d: input " + shape_str(x.shape()) + " smaller than kernel");
}

// Patch matrix for one batch item: rows are (ci,ki,kj), columns are output
// positions h*W+w. Out-of-range taps are zero.
template <typename S>
void im2col(const Tensor<S>& x, int64_t n, int64_t k, int64_t pad, MatRM<S>& col) {
  const int64_t C = x.c(), H = x.h(), W = x.w();
  col.setZero(C * k * k, H * W);
  for (int64_t ci = 0; ci < C; ++ci) {
    const S* src = x.plane(n, ci);
    for (int64_t ki = 0; ki < k; ++ki) {
      for (int64_t kj = 0; kj < k; ++kj) {
        S* dst = col.data() + (ci * k * k + ki * k + kj) * H * W;
        for (int64_t h = 0; h < H; ++h) {
          int64_t sh = h + ki - pad;
          if (sh < 0 || sh >= H) continue;
          int64_t w0 = std::max<int64_t>(0, pad - kj);
          int64_t w1 = std::min<int64_t>(W, W + pad - kj);
          for (int64_t w = w0; w < w1; ++w) dst[h * W + w] = src[sh * W + w + kj - pad];
        }
      }
    }
  }
}

// Scatter-add of a patch matrix back onto the image grid; adjoint of im2col.
template <typename S>
void col2im_add(const MatRM<S>& col, Tensor<S>& x, int64_t n, int64_t k, int64_t pad) {
  const int64_t C = x.c(), H = x.h(), W = x.w();
  for (int64_t ci = 0; ci < C; ++ci) {
    S* dst = x.plane(n, ci);
    for (int64_t ki = 0; ki < k; ++ki) {
      for (int64_t kj = 0; kj < k; ++kj) {
        const S* src = col.data() + (ci * k * k + ki * k + kj) * H * W;
        for (int64_t h = 0; h < H; ++h) {
          int64_t sh = h + ki - pad;
          if (sh < 0 || sh >= H) continue;
          int64_t w0 = std::max<int64_t>(0, pad - kj);
          int64_t w1 = std::min<int64_t>(W, W + pad - kj);
          for (int64_t w = w0; w < w1; ++w) dst[sh * W + w + kj - pad] += src[h * W + w];
        }
      }
    }
  }
}

template <typename S>
inline ConvAlgo pick_algo(const Tensor<S>& x, const ConvParams<S>& p, ConvAlgo algo) {
  if (algo != ConvAlgo::Auto) return algo;
  // Decided by shape only, so the choice is deterministic.
  int64_t work = p.cout() * p.cin() * p.kh() * p.kw() * x.h() * x.w();
  return work >= 4096 ? ConvAlgo::Im2col : ConvAlgo::Direct;
}

}  // namespace detail

/// 2-D convolution with zero padding. Same-size contract: pad 1 for 3x3
/// kernels, pad 0 for 1x1. Direct loops are the reference path; the
/// im2col + GEMM path is the fast one, and both must agree.
template <typename S>
Tensor<S> conv2d(const Tensor<S>& x, const ConvParams<S>& p, int64_t pad,
                 ConvAlgo algo = ConvAlgo::Auto) {
  detail::check_conv_args(x, p, pad);
  const int64_t N = x.n(), C = x.c(), H = x.h(), W = x.w();
  const int64_t Co = p.cout(), k = p.kh();
  const int64_t Ho = H + 2 * pad - k + 1, Wo = W + 2 * pad - k + 1;
  Tensor<S> out(N, Co, Ho, Wo);

  if (detail::pick_algo(x, p, algo) == ConvAlgo::Im2col) {
    Eigen::Map<const detail::MatRM<S>> wmat(p.weight.data().data(), Co, C * k * k);
    detail::MatRM<S> col;
    for (int64_t n = 0; n < N; ++n) {
      detail::im2col(x, n, k, pad, col);
      Eigen::Map<detail::MatRM<S>> omat(out.plane(n, 0), Co, Ho * Wo);
      omat.noalias() = wmat * col;
      for (int64_t co = 0; co < Co; ++co) omat.row(co).array() += p.bias[co];
    }
    return out;
  }

  for (int64_t n = 0; n < N; ++n) {
    for (int64_t co = 0; co < Co; ++co) {
      S* op = out.plane(n, co);
      for (int64_t h = 0; h < Ho; ++h) {
        for (int64_t w = 0; w < Wo; ++w) {
          S acc = p.bias[co];
          for (int64_t ci = 0; ci < C; ++ci) {
            const S* ip = x.plane(n, ci);
            const S* wp = p.weight.plane(co, ci);
            for (int64_t ki = 0; ki < k; ++ki) {
              int64_t sh = h + ki - pad;
              if (sh < 0 || sh >= H) continue;
              for (int64_t kj = 0; kj < k; ++kj) {
                int64_t sw = w + kj - pad;
                if (sw < 0 || sw >= W) continue;
                acc += wp[ki * k + kj] * ip[sh * W + sw];
              }
            }
          }
          op[h * Wo + w] = acc;
        }
      }
    }
  }
  return out;
}

/// Exact gradients of conv2d w.r.t. input, weight and bias, given
/// grad_out = dLoss/dOutput and the cached forward input.
template <typename S>
ConvGrads<S> conv2d_backward(const Tensor<S>& grad_out, const Tensor<S>& x,
                             const ConvParams<S>& p, int64_t pad,
                             ConvAlgo algo = ConvAlgo::Auto) {
  detail::check_conv_args(x, p, pad);
  const int64_t N = x.n(), C = x.c(), H = x.h(), W = x.w();
  const int64_t Co = p.cout(), k = p.kh();
  const int64_t Ho = H + 2 * pad - k + 1, Wo = W + 2 * pad - k + 1;
  if (grad_out.n() != N || grad_out.c() != Co || grad_out.h() != Ho || grad_out.w() != Wo)
    throw ShapeError("conv2d_backward: grad_out " + shape_str(grad_out.shape()) +
                     " does not match forward output " +
                     shape_str(Shape4{N, Co, Ho, Wo}));

  ConvGrads<S> g;
  g.input = Tensor<S>(N, C, H, W);
  g.weight = Tensor<S>(Co, C, k, k);
  g.bias.assign(static_cast<size_t>(Co), S(0));

  for (int64_t n = 0; n < N; ++n)
    for (int64_t co = 0; co < Co; ++co) {
      const S* gp = grad_out.plane(n, co);
      S acc = 0;
      for (int64_t i = 0; i < Ho * Wo; ++i) acc += gp[i];
      g.bias[static_cast<size_t>(co)] += acc;
    }

  if (detail::pick_algo(x, p, algo) == ConvAlgo::Im2col) {
    Eigen::Map<const detail::MatRM<S>> wmat(p.weight.data().data(), Co, C * k * k);
    Eigen::Map<detail::MatRM<S>> gwmat(g.weight.data().data(), Co, C * k * k);
    detail::MatRM<S> col, gcol;
    for (int64_t n = 0; n < N; ++n) {
      Eigen::Map<const detail::MatRM<S>> gomat(grad_out.plane(n, 0), Co, Ho * Wo);
      detail::im2col(x, n, k, pad, col);
      gwmat.noalias() += gomat * col.transpose();
      gcol.noalias() = wmat.transpose() * gomat;
      detail::col2im_add(gcol, g.input, n, k, pad);
    }
    return g;
  }

  for (int64_t n = 0; n < N; ++n) {
    for (int64_t co = 0; co < Co; ++co) {
      const S* gp = grad_out.plane(n, co);
      for (int64_t ci = 0; ci < C; ++ci) {
        const S* ip = x.plane(n, ci);
        S* gip = g.input.plane(n, ci);
        const S* wp = p.weight.plane(co, ci);
        S* gwp = g.weight.plane(co, ci);
        for (int64_t h = 0; h < Ho; ++h) {
          for (int64_t w = 0; w < Wo; ++w) {
            S go = gp[h * Wo + w];
            for (int64_t ki = 0; ki < k; ++ki) {
              int64_t sh = h + ki - pad;
              if (sh < 0 || sh >= H) continue;
              for (int64_t kj = 0; kj < k; ++kj) {
                int64_t sw = w + kj - pad;
                if (sw < 0 || sw >= W) continue;
                gip[sh * W + sw] += wp[ki * k + kj] * go;
                gwp[ki * k + kj] += ip[sh * W + sw] * go;
              }
            }
          }
        }
      }
    }
  }
  return g;
}

template <typename S>
Tensor<S> relu(const Tensor<S>& x) {
  Tensor<S> out(x.shape());
  const auto& in = x.data();
  auto& o = out.data();
  for (size_t i = 0; i < in.size(); ++i) o[i] = in[i] > S(0) ? in[i] : S(0);
  return out;
}

// Upstream gradient masked by indicator(pre_activation > 0).
template <typename S>
Tensor<S> relu_backward(const Tensor<S>& grad_out, const Tensor<S>& pre_activation) {
  require_same_shape(grad_out, pre_activation, "relu_backward");
  Tensor<S> out(grad_out.shape());
  const auto& g = grad_out.data();
  const auto& pre = pre_activation.data();
  auto& o = out.data();
  for (size_t i = 0; i < g.size(); ++i) o[i] = pre[i] > S(0) ? g[i] : S(0);
  return out;
}

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  require_same_shape(a, b, "add");
  Tensor<S> out(a.shape());
  for (int64_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
  return out;
}

/// Stack tensors along the channel axis, in argument order.
template <typename S>
Tensor<S> concat_channels(const std::vector<const Tensor<S>*>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  const Tensor<S>& first = *parts[0];
  int64_t c_total = 0;
  for (const Tensor<S>* t : parts) {
    if (t->n() != first.n() || t->h() != first.h() || t->w() != first.w())
      throw ShapeError("concat_channels: shape mismatch " + shape_str(first.shape()) +
                       " vs " + shape_str(t->shape()));
    c_total += t->c();
  }
  Tensor<S> out(first.n(), c_total, first.h(), first.w());
  const int64_t plane = first.h() * first.w();
  for (int64_t n = 0; n < first.n(); ++n) {
    int64_t co = 0;
    for (const Tensor<S>* t : parts) {
      std::copy(t->plane(n, 0), t->plane(n, 0) + t->c() * plane, out.plane(n, co));
      co += t->c();
    }
  }
  return out;
}

template <typename S>
Tensor<S> concat_channels(const Tensor<S>& a, const Tensor<S>& b) {
  return concat_channels<S>({&a, &b});
}

template <typename S>
Tensor<S> concat_channels(const Tensor<S>& a, const Tensor<S>& b, const Tensor<S>& c) {
  return concat_channels<S>({&a, &b, &c});
}

/// Contiguous channel sub-range [from, to).
template <typename S>
Tensor<S> slice_channels(const Tensor<S>& x, int64_t from, int64_t to) {
  if (from < 0 || from >= to || to > x.c())
    throw ShapeError("slice_channels: range [" + std::to_string(from) + "," +
                     std::to_string(to) + ") out of " + std::to_string(x.c()) + " channels");
  Tensor<S> out(x.n(), to - from, x.h(), x.w());
  const int64_t plane = x.h() * x.w();
  for (int64_t n = 0; n < x.n(); ++n)
    std::copy(x.plane(n, from), x.plane(n, from) + (to - from) * plane, out.plane(n, 0));
  return out;
}

// Backward of concat: split grad_out back into per-input channel widths.
template <typename S>
std::vector<Tensor<S>> concat_backward(const Tensor<S>& grad_out,
                                       const std::vector<int64_t>& widths) {
  int64_t sum = 0;
  for (int64_t w : widths) sum += w;
  if (sum != grad_out.c())
    throw ShapeError("concat_backward: widths sum " + std::to_string(sum) +
                     " != channels " + std::to_string(grad_out.c()));
  std::vector<Tensor<S>> grads;
  int64_t from = 0;
  for (int64_t w : widths) {
    grads.push_back(slice_channels(grad_out, from, from + w));
    from += w;
  }
  return grads;
}

// Backward of slice: scatter grad_out into a zero tensor of c_total channels.
template <typename S>
Tensor<S> slice_backward(const Tensor<S>& grad_out, int64_t c_total, int64_t from) {
  if (from < 0 || from + grad_out.c() > c_total)
    throw ShapeError("slice_backward: slice does not fit in " + std::to_string(c_total) +
                     " channels");
  Tensor<S> out(grad_out.n(), c_total, grad_out.h(), grad_out.w());
  const int64_t plane = grad_out.h() * grad_out.w();
  for (int64_t n = 0; n < grad_out.n(); ++n)
    std::copy(grad_out.plane(n, 0), grad_out.plane(n, 0) + grad_out.c() * plane,
              out.plane(n, from));
  return out;
}

/// Sub-pixel rearrangement: N x (r^2 C) x H x W -> N x C x rH x rW with
/// out(n,c,h,w) = in(n, c*r^2 + r*(h%r) + (w%r), h/r, w/r). Checkpoints
/// depend on this channel-to-subpixel convention.
template <typename S>
Tensor<S> pixel_shuffle(const Tensor<S>& x, int64_t r) {
  if (r < 1) throw ShapeError("pixel_shuffle: factor must be >= 1");
  if (x.c() % (r * r) != 0)
    throw ShapeError("pixel_shuffle: channels " + std::to_string(x.c()) +
                     " not divisible by r^2 = " + std::to_string(r * r));
  const int64_t N = x.n(), C = x.c() / (r * r), H = x.h(), W = x.w();
  Tensor<S> out(N, C, r * H, r * W);
  for (int64_t n = 0; n < N; ++n)
    for (int64_t c = 0; c < C; ++c) {
      S* op = out.plane(n, c);
      for (int64_t dy = 0; dy < r; ++dy)
        for (int64_t dx = 0; dx < r; ++dx) {
          const S* ip = x.plane(n, c * r * r + dy * r + dx);
          for (int64_t h = 0; h < H; ++h)
            for (int64_t w = 0; w < W; ++w)
              op[(h * r + dy) * (r * W) + w * r + dx] = ip[h * W + w];
        }
    }
  return out;
}

/// Exact inverse of pixel_shuffle; also its backward pass, since a
/// permutation's adjoint is its inverse.
template <typename S>
Tensor<S> pixel_unshuffle(const Tensor<S>& x, int64_t r) {
  if (r < 1) throw ShapeError("pixel_unshuffle: factor must be >= 1");
  if (x.h() % r != 0 || x.w() % r != 0)
    throw ShapeError("pixel_unshuffle: spatial dims " + shape_str(x.shape()) +
                     " not divisible by " + std::to_string(r));
  const int64_t N = x.n(), C = x.c(), H = x.h() / r, W = x.w() / r;
  Tensor<S> out(N, C * r * r, H, W);
  for (int64_t n = 0; n < N; ++n)
    for (int64_t c = 0; c < C; ++c) {
      const S* ip = x.plane(n, c);
      for (int64_t dy = 0; dy < r; ++dy)
        for (int64_t dx = 0; dx < r; ++dx) {
          S* op = out.plane(n, c * r * r + dy * r + dx);
          for (int64_t h = 0; h < H; ++h)
            for (int64_t w = 0; w < W; ++w)
              op[h * W + w] = ip[(h * r + dy) * (r * W) + w * r + dx];
        }
    }
  return out;
}

}  // namespace mdcn
