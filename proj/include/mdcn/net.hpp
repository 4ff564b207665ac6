#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mdcn/ops.hpp"
#include "mdcn/rng.hpp"
#include "mdcn/tensor.hpp"

namespace mdcn {

/// Architecture hyperparameters. The reference configuration is
/// feat=64, growth=36, 12 blocks of 6 dual-link units each.
struct NetConfig {
  int64_t feat = 64;       // F: base channel count
  int64_t growth = 36;     // K: channels added by each dual-link unit
  int64_t blocks = 12;     // number of MDCBs
  int64_t units = 6;       // dual-link units per MDCB
  int64_t scale = 2;       // target SR factor, one of {2,3,4,8}
  int64_t in_channels = 3; // 3 for images, 15 for 5-frame early fusion
  bool global_skip = false;

  // Sub-pixel factor of the reconstruction tail. Factors 4 and 8 reuse
  // the x2 tail recurrently; only x3 gets its own tail.
  int64_t tail_factor() const { return scale == 3 ? 3 : 2; }

  void validate() const {
    if (feat <= 0 || growth <= 0 || blocks < 1 || units < 1)
      throw ConfigError("net config: feat/growth must be positive, blocks/units >= 1");
    if (scale != 2 && scale != 3 && scale != 4 && scale != 8)
      throw ConfigError("net config: scale must be one of {2,3,4,8}, got " +
                        std::to_string(scale));
    if (in_channels != 3 && in_channels != 15)
      throw ConfigError("net config: in_channels must be 3 or 15, got " +
                        std::to_string(in_channels));
  }

  bool operator==(const NetConfig&) const = default;
};

/// One dual-link unit: a single 3x3 conv C -> (F+K) followed by ReLU.
/// The first F output channels are added onto the last F input channels,
/// the remaining K are concatenated as new features.
template <typename S>
struct DualLinkUnitParams {
  ConvParams<S> conv;
};

/// Mixed-dense connection block: units grow the width from F to F+n*K,
/// a 1x1 fusion conv (no ReLU) compresses back to F, and the block input
/// is added on top.
template <typename S>
struct MDCBParams {
  std::vector<DualLinkUnitParams<S>> units;
  ConvParams<S> fusion;
};

template <typename S>
struct ModelParams {
  NetConfig config;
  ConvParams<S> head0, head1;          // feature extraction, in_channels->F, F->F
  std::vector<MDCBParams<S>> blocks;
  ConvParams<S> tail_expand;           // F -> r^2*F before pixel shuffle
  ConvParams<S> tail_out;              // F -> 3 in HR space, no ReLU

  static ModelParams shaped(const NetConfig& cfg) {
    cfg.validate();
    ModelParams m;
    m.config = cfg;
    const int64_t F = cfg.feat, K = cfg.growth, r = cfg.tail_factor();
    m.head0 = ConvParams<S>::make(F, cfg.in_channels, 3);
    m.head1 = ConvParams<S>::make(F, F, 3);
    m.blocks.resize(static_cast<size_t>(cfg.blocks));
    for (auto& b : m.blocks) {
      b.units.resize(static_cast<size_t>(cfg.units));
      for (int64_t u = 0; u < cfg.units; ++u)
        b.units[static_cast<size_t>(u)].conv = ConvParams<S>::make(F + K, F + u * K, 3);
      b.fusion = ConvParams<S>::make(F, F + cfg.units * K, 1);
    }
    m.tail_expand = ConvParams<S>::make(r * r * F, F, 3);
    m.tail_out = ConvParams<S>::make(3, F, 3);
    m.check_shapes();
    return m;
  }

  /// Fan-in scaled uniform init, bound sqrt(1/(Cin*kh*kw)); biases zero.
  /// Same seed and config give bit-identical parameters.
  static ModelParams init(const NetConfig& cfg, std::uint64_t seed) {
    ModelParams m = shaped(cfg);
    RandomEngine rng(seed);
    m.visit([&rng](const std::string&, std::vector<S>& flat, const Shape4& shape) {
      if (shape[1] == 1 && shape[2] == 1 && shape[3] == 1) return;  // bias stays zero
      double bound = std::sqrt(1.0 / double(shape[1] * shape[2] * shape[3]));
      for (S& v : flat) v = static_cast<S>(rng.uniform(-bound, bound));
    });
    return m;
  }

  static ModelParams zeros_like(const ModelParams& other) { return shaped(other.config); }

  // Channel accounting: unit i consumes F+i*K channels and the fusion
  // conv consumes exactly F + units*K. Violations throw.
  void check_shapes() const {
    const int64_t F = config.feat, K = config.growth;
    if (head0.cin() != config.in_channels || head0.cout() != F || head1.cin() != F ||
        head1.cout() != F)
      throw ShapeError("model: head conv shapes inconsistent with config");
    if (static_cast<int64_t>(blocks.size()) != config.blocks)
      throw ShapeError("model: block count mismatch");
    for (const auto& b : blocks) {
      if (static_cast<int64_t>(b.units.size()) != config.units)
        throw ShapeError("model: unit count mismatch");
      for (int64_t u = 0; u < config.units; ++u) {
        const auto& cv = b.units[static_cast<size_t>(u)].conv;
        if (cv.cin() != F + u * K || cv.cout() != F + K)
          throw ShapeError("model: unit " + std::to_string(u) + " must map " +
                           std::to_string(F + u * K) + " -> " + std::to_string(F + K) +
                           " channels, got " + shape_str(cv.weight.shape()));
      }
      if (b.fusion.cin() != F + config.units * K || b.fusion.cout() != F ||
          b.fusion.kh() != 1)
        throw ShapeError("model: fusion conv must be 1x1 mapping " +
                         std::to_string(F + config.units * K) + " -> " + std::to_string(F) +
                         ", got " + shape_str(b.fusion.weight.shape()));
    }
    const int64_t r = config.tail_factor();
    if (tail_expand.cin() != F || tail_expand.cout() != r * r * F || tail_out.cin() != F ||
        tail_out.cout() != 3)
      throw ShapeError("model: tail conv shapes inconsistent with config");
  }

  /// Visits every parameter array in a fixed, documented order:
  /// head.0, head.1, block.<b>.unit.<u>, block.<b>.fusion, tail.expand,
  /// tail.out; weight before bias. Biases visit with shape (Cout,1,1,1).
  template <typename Fn>
  void visit(Fn&& fn) {
    auto conv = [&fn](const std::string& name, ConvParams<S>& p) {
      fn(name + ".weight", p.weight.data(), p.weight.shape());
      fn(name + ".bias", p.bias, Shape4{p.cout(), 1, 1, 1});
    };
    conv("head.0", head0);
    conv("head.1", head1);
    for (size_t b = 0; b < blocks.size(); ++b) {
      for (size_t u = 0; u < blocks[b].units.size(); ++u)
        conv("block." + std::to_string(b) + ".unit." + std::to_string(u),
             blocks[b].units[u].conv);
      conv("block." + std::to_string(b) + ".fusion", blocks[b].fusion);
    }
    conv("tail.expand", tail_expand);
    conv("tail.out", tail_out);
  }

  template <typename Fn>
  void visit(Fn&& fn) const {
    const_cast<ModelParams*>(this)->visit(
        [&fn](const std::string& name, std::vector<S>& flat, const Shape4& shape) {
          fn(name, static_cast<const std::vector<S>&>(flat), shape);
        });
  }
};

// ---- parameter accounting -------------------------------------------------

struct ParamRow {
  std::string name;
  Shape4 shape;
  int64_t count;
};

struct ParamCount {
  int64_t total = 0;
  std::vector<ParamRow> rows;
};

template <typename S>
ParamCount count_params(const ModelParams<S>& m) {
  ParamCount pc;
  m.visit([&pc](const std::string& name, const std::vector<S>& flat, const Shape4& shape) {
    pc.rows.push_back({name, shape, static_cast<int64_t>(flat.size())});
    pc.total += static_cast<int64_t>(flat.size());
  });
  return pc;
}

// Pre-fusion channel widths F, F+K, ..., F+n*K of one block.
inline std::vector<int64_t> channel_schedule(const NetConfig& cfg) {
  std::vector<int64_t> widths;
  for (int64_t u = 0; u <= cfg.units; ++u) widths.push_back(cfg.feat + u * cfg.growth);
  return widths;
}

// ---- forward / backward ----------------------------------------------------

// Cached activations needed to run the exact backward pass.
template <typename S>
struct UnitTape {
  Tensor<S> input;  // unit input, C channels
  Tensor<S> pre;    // conv output before ReLU, F+K channels
};

template <typename S>
struct BlockTape {
  Tensor<S> input;  // block input, F channels
  std::vector<UnitTape<S>> units;
  Tensor<S> fusion_in;  // width F + n*K
};

template <typename S>
struct MdcnTape {
  Tensor<S> input;
  Tensor<S> head0_pre, head0_act;
  Tensor<S> head1_pre;
  std::vector<BlockTape<S>> blocks;
  Tensor<S> body_out;   // input of tail_expand
  Tensor<S> tail_pre;   // tail_expand output before ReLU
  Tensor<S> tail_out_in;  // pixel-shuffled HR features, input of tail_out
};

/// One dual-link unit. Output width C+K: untouched prefix channels,
/// last-F input channels plus the residual part, then K new channels.
template <typename S>
Tensor<S> dual_link_forward(const Tensor<S>& x, const DualLinkUnitParams<S>& unit,
                            int64_t F, int64_t K, UnitTape<S>* tape = nullptr) {
  if (x.c() < F)
    throw ShapeError("dual_link: input has " + std::to_string(x.c()) +
                     " channels, fewer than F = " + std::to_string(F));
  Tensor<S> pre = conv2d(x, unit.conv, 1);
  Tensor<S> z = relu(pre);
  Tensor<S> zf = slice_channels(z, 0, F);
  Tensor<S> zk = slice_channels(z, F, F + K);
  Tensor<S> last = slice_channels(x, x.c() - F, x.c());
  Tensor<S> mid = add(last, zf);
  Tensor<S> out;
  if (x.c() > F) {
    Tensor<S> prefix = slice_channels(x, 0, x.c() - F);
    out = concat_channels(prefix, mid, zk);
  } else {
    out = concat_channels(mid, zk);
  }
  if (tape) {
    tape->input = x;
    tape->pre = std::move(pre);
  }
  return out;
}

// Returns grad w.r.t. the unit input; accumulates weight/bias grads.
template <typename S>
Tensor<S> dual_link_backward(const Tensor<S>& grad_out, const UnitTape<S>& tape,
                             const DualLinkUnitParams<S>& unit, int64_t F, int64_t K,
                             DualLinkUnitParams<S>& grads) {
  const int64_t C = tape.input.c();
  Tensor<S> g_mid = slice_channels(grad_out, C - F, C);
  Tensor<S> g_new = slice_channels(grad_out, C, C + K);
  Tensor<S> g_z = concat_channels(g_mid, g_new);
  Tensor<S> g_pre = relu_backward(g_z, tape.pre);
  ConvGrads<S> cg = conv2d_backward(g_pre, tape.input, unit.conv, 1);
  for (int64_t i = 0; i < cg.weight.numel(); ++i)
    grads.conv.weight.data()[i] += cg.weight.data()[i];
  for (size_t i = 0; i < cg.bias.size(); ++i) grads.conv.bias[i] += cg.bias[i];
  // Identity routes: prefix passes through, last-F channels also feed the sum.
  Tensor<S>& g_x = cg.input;
  const int64_t plane = g_x.h() * g_x.w();
  for (int64_t n = 0; n < g_x.n(); ++n) {
    const S* gp = grad_out.plane(n, 0);
    S* xp = g_x.plane(n, 0);
    for (int64_t i = 0; i < C * plane; ++i) xp[i] += gp[i];
  }
  return std::move(g_x);
}

template <typename S>
Tensor<S> mdcb_forward(const Tensor<S>& x, const MDCBParams<S>& block, int64_t F, int64_t K,
                       BlockTape<S>* tape = nullptr) {
  if (x.c() != F)
    throw ShapeError("mdcb: input must have F = " + std::to_string(F) + " channels, got " +
                     std::to_string(x.c()));
  if (tape) {
    tape->input = x;
    tape->units.resize(block.units.size());
  }
  Tensor<S> h = x;
  for (size_t u = 0; u < block.units.size(); ++u)
    h = dual_link_forward(h, block.units[u], F, K, tape ? &tape->units[u] : nullptr);
  if (tape) tape->fusion_in = h;
  Tensor<S> fused = conv2d(h, block.fusion, 0);  // 1x1, no trailing ReLU
  Tensor<S> out = add(x, fused);
  return out;
}

template <typename S>
Tensor<S> mdcb_backward(const Tensor<S>& grad_out, const BlockTape<S>& tape,
                        const MDCBParams<S>& block, int64_t F, int64_t K,
                        MDCBParams<S>& grads) {
  ConvGrads<S> fg = conv2d_backward(grad_out, tape.fusion_in, block.fusion, 0);
  for (int64_t i = 0; i < fg.weight.numel(); ++i)
    grads.fusion.weight.data()[i] += fg.weight.data()[i];
  for (size_t i = 0; i < fg.bias.size(); ++i) grads.fusion.bias[i] += fg.bias[i];
  Tensor<S> g = std::move(fg.input);
  for (size_t u = block.units.size(); u-- > 0;)
    g = dual_link_backward(g, tape.units[u], block.units[u], F, K, grads.units[u]);
  // Block-level skip: input feeds the output directly.
  Tensor<S> g_in = add(g, grad_out);
  return g_in;
}

/// Full network forward pass: two head convs with ReLU, the MDCB chain,
/// then tail_expand -> ReLU -> pixel shuffle -> tail_out (no ReLU).
/// Output stays unclamped; clamping happens only at image emission.
template <typename S>
Tensor<S> mdcn_forward(const Tensor<S>& img, const ModelParams<S>& m,
                       MdcnTape<S>* tape = nullptr) {
  if (img.c() != m.config.in_channels)
    throw ShapeError("mdcn_forward: expected " + std::to_string(m.config.in_channels) +
                     " input channels, got " + shape_str(img.shape()));
  if (img.h() < 1 || img.w() < 1)
    throw ShapeError("mdcn_forward: empty spatial extent " + shape_str(img.shape()));
  const int64_t F = m.config.feat, K = m.config.growth, r = m.config.tail_factor();

  Tensor<S> pre0 = conv2d(img, m.head0, 1);
  Tensor<S> act0 = relu(pre0);
  Tensor<S> pre1 = conv2d(act0, m.head1, 1);
  Tensor<S> x = relu(pre1);
  Tensor<S> head_features = m.config.global_skip ? x : Tensor<S>();

  if (tape) {
    tape->input = img;
    tape->head0_pre = std::move(pre0);
    tape->head0_act = act0;
    tape->head1_pre = std::move(pre1);
    tape->blocks.resize(m.blocks.size());
  }
  for (size_t b = 0; b < m.blocks.size(); ++b)
    x = mdcb_forward(x, m.blocks[b], F, K, tape ? &tape->blocks[b] : nullptr);
  if (m.config.global_skip) x = add(x, head_features);

  Tensor<S> tail_pre = conv2d(x, m.tail_expand, 1);
  Tensor<S> tail_act = relu(tail_pre);
  Tensor<S> ps = pixel_shuffle(tail_act, r);
  Tensor<S> out = conv2d(ps, m.tail_out, 1);
  if (tape) {
    tape->body_out = std::move(x);
    tape->tail_pre = std::move(tail_pre);
    tape->tail_out_in = std::move(ps);
  }
  return out;
}

/// Backward through the whole network. Accumulates parameter gradients
/// into `grads` (zero it between steps) and returns grad w.r.t. the input
/// so recurrent passes can be chained.
template <typename S>
Tensor<S> mdcn_backward(const Tensor<S>& grad_out, const MdcnTape<S>& tape,
                        const ModelParams<S>& m, ModelParams<S>& grads) {
  const int64_t F = m.config.feat, K = m.config.growth, r = m.config.tail_factor();
  auto accumulate = [](ConvGrads<S>& src, ConvParams<S>& dst) {
    for (int64_t i = 0; i < src.weight.numel(); ++i)
      dst.weight.data()[i] += src.weight.data()[i];
    for (size_t i = 0; i < src.bias.size(); ++i) dst.bias[i] += src.bias[i];
  };

  ConvGrads<S> g_to = conv2d_backward(grad_out, tape.tail_out_in, m.tail_out, 1);
  accumulate(g_to, grads.tail_out);
  Tensor<S> g_act = pixel_unshuffle(g_to.input, r);
  Tensor<S> g_tail_pre = relu_backward(g_act, tape.tail_pre);
  ConvGrads<S> g_te = conv2d_backward(g_tail_pre, tape.body_out, m.tail_expand, 1);
  accumulate(g_te, grads.tail_expand);

  Tensor<S> g = std::move(g_te.input);
  Tensor<S> g_skip = m.config.global_skip ? g : Tensor<S>();
  for (size_t b = m.blocks.size(); b-- > 0;)
    g = mdcb_backward(g, tape.blocks[b], m.blocks[b], F, K, grads.blocks[b]);
  if (m.config.global_skip) g = add(g, g_skip);

  Tensor<S> g_pre1 = relu_backward(g, tape.head1_pre);
  ConvGrads<S> g_h1 = conv2d_backward(g_pre1, tape.head0_act, m.head1, 1);
  accumulate(g_h1, grads.head1);
  Tensor<S> g_pre0 = relu_backward(g_h1.input, tape.head0_pre);
  ConvGrads<S> g_h0 = conv2d_backward(g_pre0, tape.input, m.head0, 1);
  accumulate(g_h0, grads.head0);
  return std::move(g_h0.input);
}

// ---- scale recurrence -------------------------------------------------------

// Number of recurrent passes needed for `factor` with this model.
inline int64_t passes_for_factor(const NetConfig& cfg, int64_t factor) {
  if (cfg.tail_factor() == 3) {
    if (factor != 3)
      throw ConfigError("factor " + std::to_string(factor) +
                        " unsupported by an x3 model (only 3)");
    return 1;
  }
  switch (factor) {
    case 2: return 1;
    case 4: return 2;
    case 8: return 3;
    default:
      throw ConfigError("unsupported factor " + std::to_string(factor) +
                        ": an x2 model composes to factors {2,4,8}; x3 needs its own tail");
  }
}

// Stacks five copies of a 3-channel tensor into the 15-channel early-fusion
// layout, used when a multi-frame model is applied recurrently.
template <typename S>
Tensor<S> replicate_frames(const Tensor<S>& x, int64_t copies) {
  std::vector<const Tensor<S>*> parts(static_cast<size_t>(copies), &x);
  return concat_channels(parts);
}

template <typename S>
Tensor<S> sum_frame_groups(const Tensor<S>& g, int64_t copies) {
  const int64_t c = g.c() / copies;
  Tensor<S> out = slice_channels(g, 0, c);
  for (int64_t i = 1; i < copies; ++i) {
    Tensor<S> part = slice_channels(g, i * c, (i + 1) * c);
    out = add(out, part);
  }
  return out;
}

/// Applies the same network log2(factor) times, feeding each unclamped
/// output back in. One x2 parameter set serves factors 2, 4 and 8.
/// A 15-channel model replicates the previous output five times between
/// passes (the degenerate all-same-frame window).
template <typename S>
Tensor<S> scale_recurrent_sr(const Tensor<S>& img, const ModelParams<S>& m, int64_t factor) {
  const int64_t passes = passes_for_factor(m.config, factor);
  Tensor<S> x = img;
  for (int64_t p = 0; p < passes; ++p) {
    if (p > 0 && m.config.in_channels != x.c())
      x = replicate_frames(x, m.config.in_channels / x.c());
    x = mdcn_forward(x, m);
  }
  return x;
}

// Tapes of each recurrent pass of one training forward.
template <typename S>
struct SrTape {
  std::vector<MdcnTape<S>> passes;
};

template <typename S>
Tensor<S> sr_forward_training(const Tensor<S>& input, const ModelParams<S>& m,
                              int64_t factor, SrTape<S>& tape) {
  const int64_t passes = passes_for_factor(m.config, factor);
  tape.passes.resize(static_cast<size_t>(passes));
  Tensor<S> x = input;
  for (int64_t p = 0; p < passes; ++p) {
    if (p > 0 && m.config.in_channels != x.c())
      x = replicate_frames(x, m.config.in_channels / x.c());
    x = mdcn_forward(x, m, &tape.passes[static_cast<size_t>(p)]);
  }
  return x;
}

// Accumulates parameter gradients over all recurrent passes and returns
// the gradient w.r.t. the original input.
template <typename S>
Tensor<S> sr_backward_training(const Tensor<S>& grad_out, const SrTape<S>& tape,
                               const ModelParams<S>& m, ModelParams<S>& grads) {
  Tensor<S> g = grad_out;
  for (size_t p = tape.passes.size(); p-- > 0;) {
    g = mdcn_backward(g, tape.passes[p], m, grads);
    if (p > 0 && g.c() != 3) g = sum_frame_groups(g, g.c() / 3);
  }
  return g;
}

// ---- warm start --------------------------------------------------------------

struct WarmStartSummary {
  std::vector<std::string> copied;
  std::vector<std::string> adapted;
  std::vector<std::string> skipped;
};

/// Copies every parameter whose name and shape match. A 3-channel first
/// conv warm-starting a 15-channel head is tiled five times and divided
/// by 5, which preserves the response to a static frame window.
template <typename S>
WarmStartSummary warm_start(ModelParams<S>& dst, const ModelParams<S>& src) {
  WarmStartSummary summary;
  // Index the source arrays by name.
  std::vector<std::pair<std::string, std::pair<const std::vector<S>*, Shape4>>> index;
  src.visit([&index](const std::string& name, const std::vector<S>& flat, const Shape4& sh) {
    index.emplace_back(name, std::make_pair(&flat, sh));
  });
  auto find = [&index](const std::string& name)
      -> const std::pair<const std::vector<S>*, Shape4>* {
    for (const auto& e : index)
      if (e.first == name) return &e.second;
    return nullptr;
  };
  dst.visit([&](const std::string& name, std::vector<S>& flat, const Shape4& shape) {
    const auto* found = find(name);
    if (!found) {
      summary.skipped.push_back(name);
      return;
    }
    const auto& [src_flat, src_shape] = *found;
    if (src_shape == shape) {
      flat = *src_flat;
      summary.copied.push_back(name);
      return;
    }
    // First-layer channel adaptation: same Cout/kh/kw, Cin grows m-fold.
    if (name == "head.0.weight" && src_shape[0] == shape[0] && src_shape[2] == shape[2] &&
        src_shape[3] == shape[3] && shape[1] % src_shape[1] == 0) {
      const int64_t m_copies = shape[1] / src_shape[1];
      const int64_t cin = src_shape[1], kk = shape[2] * shape[3];
      for (int64_t co = 0; co < shape[0]; ++co)
        for (int64_t rep = 0; rep < m_copies; ++rep)
          for (int64_t ci = 0; ci < cin; ++ci)
            for (int64_t t = 0; t < kk; ++t)
              flat[static_cast<size_t>(((co * shape[1]) + rep * cin + ci) * kk + t)] =
                  (*src_flat)[static_cast<size_t>((co * cin + ci) * kk + t)] /
                  static_cast<S>(m_copies);
      summary.adapted.push_back(name);
      return;
    }
    summary.skipped.push_back(name);
  });
  return summary;
}

}  // namespace mdcn
