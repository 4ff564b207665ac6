#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "mdcn/net.hpp"
#include "mdcn/optim.hpp"
#include "support.hpp"

using namespace mdcn;
using testsup::check_gradient;
using testsup::dot;
using testsup::random_tensor;
using testsup::tensor_slots;
using testsup::vector_slots;

namespace {

NetConfig micro_cfg() {
  NetConfig c;
  c.feat = 4;
  c.growth = 2;
  c.blocks = 1;
  c.units = 1;
  c.scale = 2;
  return c;
}

NetConfig reference_cfg() {
  NetConfig c;  // defaults are the reference configuration
  return c;
}

int64_t conv_count(int64_t co, int64_t ci, int64_t k) { return co * ci * k * k + co; }

// Finite differences are invalid exactly on the ReLU kink. Zero-initialized
// biases put entire zero feature planes exactly there, so FD test models get
// biases bounded away from zero.
void randomize_biases(ModelParams<double>& m, RandomEngine& rng) {
  m.visit([&rng](const std::string&, std::vector<double>& flat, const Shape4& s) {
    if (s[1] == 1 && s[2] == 1 && s[3] == 1)
      for (double& v : flat) v = rng.uniform(0.02, 0.1);
  });
}

// Distance of the nearest pre-activation to the ReLU kink. FD with step h is
// only trustworthy when this margin comfortably exceeds h times the network's
// internal sensitivity, so the FD tests assert it up front.
double kink_margin(const MdcnTape<double>& tape) {
  double m = std::numeric_limits<double>::infinity();
  auto scan = [&m](const TensorD& t) {
    for (double v : t.data()) m = std::min(m, std::abs(v));
  };
  scan(tape.head0_pre);
  scan(tape.head1_pre);
  for (const auto& b : tape.blocks)
    for (const auto& u : b.units) scan(u.pre);
  scan(tape.tail_pre);
  return m;
}

double kink_margin(const SrTape<double>& tape) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& p : tape.passes) m = std::min(m, kink_margin(p));
  return m;
}

// Walks the layer shapes straight from the config, without touching
// ModelParams, so parameter counting has an independent cross-check.
int64_t expected_param_count(const NetConfig& c) {
  const int64_t F = c.feat, K = c.growth, r = c.scale == 3 ? 3 : 2;
  int64_t total = conv_count(F, c.in_channels, 3) + conv_count(F, F, 3);
  for (int64_t b = 0; b < c.blocks; ++b) {
    for (int64_t u = 0; u < c.units; ++u) total += conv_count(F + K, F + u * K, 3);
    total += conv_count(F, F + c.units * K, 1);
  }
  total += conv_count(r * r * F, F, 3) + conv_count(3, F, 3);
  return total;
}

}  // namespace

TEST_CASE("config validation") {
  NetConfig c = reference_cfg();
  CHECK(c.feat == 64);
  CHECK(c.growth == 36);
  CHECK(c.blocks == 12);
  CHECK(c.units == 6);
  c.validate();

  for (int64_t s : {2LL, 3LL, 4LL, 8LL}) {
    c.scale = s;
    c.validate();
    CHECK(c.tail_factor() == (s == 3 ? 3 : 2));
  }
  c.scale = 5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = reference_cfg();
  c.in_channels = 7;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = reference_cfg();
  c.feat = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = reference_cfg();
  c.blocks = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("channel schedule") {
  std::vector<int64_t> widths = channel_schedule(reference_cfg());
  REQUIRE(widths.size() == 7);
  CHECK(widths.front() == 64);
  CHECK(widths[1] == 100);
  CHECK(widths.back() == 280);  // 64 + 6*36, the width entering the fusion conv

  NetConfig small;
  small.feat = 16;
  small.growth = 8;
  small.units = 4;
  CHECK(channel_schedule(small).back() == 48);
}

TEST_CASE("parameter shapes, naming and counting") {
  auto m = ModelParams<float>::shaped(reference_cfg());

  SUBCASE("count matches an independent shape walk and the frozen constant") {
    ParamCount pc = count_params(m);
    CHECK(pc.total == expected_param_count(reference_cfg()));
    CHECK(pc.total == 10390371);
    // Same parameter object serves x2 and x8; nothing scale-specific to add.
    int64_t row_sum = 0;
    for (const auto& row : pc.rows) row_sum += row.count;
    CHECK(row_sum == pc.total);
  }

  SUBCASE("single conv and dual-link unit counts") {
    auto c1 = ConvParams<float>::make(2, 4, 1);
    CHECK(int64_t(c1.weight.numel() + int64_t(c1.bias.size())) == 10);
    auto unit = ConvParams<float>::make(16 + 8, 16, 3);
    CHECK(int64_t(unit.weight.numel() + int64_t(unit.bias.size())) == 3480);
  }

  SUBCASE("visit order is stable and bias shapes are Cout x1x1x1") {
    NetConfig c = micro_cfg();
    auto mm = ModelParams<float>::shaped(c);
    std::vector<std::string> names;
    std::vector<Shape4> shapes;
    mm.visit([&](const std::string& n, const std::vector<float>&, const Shape4& s) {
      names.push_back(n);
      shapes.push_back(s);
    });
    const std::vector<std::string> expect = {
        "head.0.weight",         "head.0.bias",         "head.1.weight",
        "head.1.bias",           "block.0.unit.0.weight", "block.0.unit.0.bias",
        "block.0.fusion.weight", "block.0.fusion.bias", "tail.expand.weight",
        "tail.expand.bias",      "tail.out.weight",     "tail.out.bias"};
    CHECK(names == expect);
    CHECK(shapes[1] == Shape4{4, 1, 1, 1});
    CHECK(shapes[4] == Shape4{6, 4, 3, 3});
    CHECK(shapes[6] == Shape4{4, 6, 1, 1});
    CHECK(shapes[8] == Shape4{16, 4, 3, 3});
  }

  SUBCASE("shape violations are caught") {
    auto bad = ModelParams<float>::shaped(micro_cfg());
    bad.blocks[0].fusion = ConvParams<float>::make(4, 5, 1);
    CHECK_THROWS_AS(bad.check_shapes(), ShapeError);
    auto bad2 = ModelParams<float>::shaped(micro_cfg());
    bad2.head0 = ConvParams<float>::make(4, 4, 3);
    CHECK_THROWS_AS(bad2.check_shapes(), ShapeError);
  }
}

TEST_CASE("initialization is seeded, bounded and bias-free") {
  NetConfig c = micro_cfg();
  auto a = ModelParams<double>::init(c, 7);
  auto b = ModelParams<double>::init(c, 7);
  auto d = ModelParams<double>::init(c, 8);

  bool identical = true, any_diff = false, bias_zero = true, bounded = true;
  auto pa = param_arrays(a), pb = param_arrays(b), pd = param_arrays(d);
  for (size_t k = 0; k < pa.size(); ++k) {
    identical = identical && (*pa[k].second == *pb[k].second);
    any_diff = any_diff || (*pa[k].second != *pd[k].second);
  }
  a.visit([&](const std::string& name, const std::vector<double>& flat, const Shape4& s) {
    if (s[1] == 1 && s[2] == 1 && s[3] == 1) {
      for (double v : flat) bias_zero = bias_zero && v == 0.0;
    } else {
      const double bound = std::sqrt(1.0 / double(s[1] * s[2] * s[3]));
      bool nonzero = false;
      for (double v : flat) {
        bounded = bounded && std::abs(v) <= bound;
        nonzero = nonzero || v != 0.0;
      }
      CHECK_MESSAGE(nonzero, name);
    }
  });
  CHECK(identical);
  CHECK(any_diff);
  CHECK(bias_zero);
  CHECK(bounded);
}

TEST_CASE("dual-link unit") {
  const int64_t F = 16, K = 8;
  RandomEngine rng(3);

  SUBCASE("shape law and prefix preservation") {
    TensorD x = random_tensor<double>(rng, 1, 16, 8, 8);
    DualLinkUnitParams<double> unit{ConvParams<double>::make(F + K, 16, 3)};
    for (double& v : unit.conv.weight.data()) v = rng.uniform(-0.1, 0.1);
    TensorD y = dual_link_forward(x, unit, F, K);
    CHECK(y.shape() == Shape4{1, 24, 8, 8});

    // With C == F there is no prefix; widen the input to get one.
    TensorD x2 = random_tensor<double>(rng, 1, F + K, 8, 8);
    DualLinkUnitParams<double> unit2{ConvParams<double>::make(F + K, F + K, 3)};
    for (double& v : unit2.conv.weight.data()) v = rng.uniform(-0.1, 0.1);
    TensorD y2 = dual_link_forward(x2, unit2, F, K);
    CHECK(y2.c() == F + 2 * K);
    for (int64_t c = 0; c < K; ++c)  // prefix channels 0..C-F pass through bit-exactly
      for (int64_t h = 0; h < 8; ++h)
        for (int64_t w = 0; w < 8; ++w) CHECK(y2(0, c, h, w) == x2(0, c, h, w));
  }

  SUBCASE("all-zero unit appends zeros and keeps the input") {
    TensorD x = random_tensor<double>(rng, 2, F, 4, 4);
    DualLinkUnitParams<double> unit{ConvParams<double>::make(F + K, F, 3)};
    TensorD y = dual_link_forward(x, unit, F, K);
    for (int64_t n = 0; n < 2; ++n)
      for (int64_t c = 0; c < F + K; ++c)
        for (int64_t h = 0; h < 4; ++h)
          for (int64_t w = 0; w < 4; ++w)
            CHECK(y(n, c, h, w) == (c < F ? x(n, c, h, w) : 0.0));
  }

  SUBCASE("input too narrow is rejected") {
    TensorD x(1, 8, 4, 4);
    DualLinkUnitParams<double> unit{ConvParams<double>::make(F + K, 8, 3)};
    CHECK_THROWS_AS(dual_link_forward(x, unit, F, K), ShapeError);
  }

  SUBCASE("gradients match finite differences under sum-of-squares loss") {
    const int64_t f = 3, k = 2;
    TensorD x = random_tensor<double>(rng, 1, 5, 3, 3);
    DualLinkUnitParams<double> unit{ConvParams<double>::make(f + k, 5, 3)};
    for (double& v : unit.conv.weight.data()) v = rng.uniform(-0.5, 0.5);
    for (double& v : unit.conv.bias) v = rng.uniform(0.05, 0.2);

    auto loss = [&]() {
      TensorD y = dual_link_forward(x, unit, f, k);
      double s = 0;
      for (double v : y.data()) s += v * v;
      return s;
    };
    UnitTape<double> tape;
    TensorD y = dual_link_forward(x, unit, f, k, &tape);
    TensorD gout(y.shape());
    for (int64_t i = 0; i < y.numel(); ++i) gout.data()[size_t(i)] = 2.0 * y.data()[size_t(i)];
    DualLinkUnitParams<double> grads{ConvParams<double>::make(f + k, 5, 3)};
    TensorD gin = dual_link_backward(gout, tape, unit, f, k, grads);

    CHECK(check_gradient(loss, tensor_slots(unit.conv.weight), grads.conv.weight.data())
              .max_rel < 1e-4);
    CHECK(check_gradient(loss, vector_slots(unit.conv.bias), grads.conv.bias).max_rel < 1e-4);
    CHECK(check_gradient(loss, tensor_slots(x), gin.data()).max_rel < 1e-4);
  }
}

TEST_CASE("mixed-dense connection block") {
  RandomEngine rng(4);
  const int64_t F = 4, K = 2, units = 3;
  NetConfig c;
  c.feat = F;
  c.growth = K;
  c.blocks = 1;
  c.units = units;
  auto m = ModelParams<double>::init(c, 5);

  SUBCASE("zero fusion makes the block an identity") {
    MDCBParams<double>& blk = m.blocks[0];
    blk.fusion.weight.fill(0.0);
    std::fill(blk.fusion.bias.begin(), blk.fusion.bias.end(), 0.0);
    TensorD x = random_tensor<double>(rng, 2, F, 5, 5);
    TensorD y = mdcb_forward(x, blk, F, K);
    for (int64_t i = 0; i < x.numel(); ++i)
      CHECK(y.data()[size_t(i)] == x.data()[size_t(i)]);
  }

  SUBCASE("pre-fusion width follows F + n*K") {
    TensorD x = random_tensor<double>(rng, 1, F, 4, 4);
    BlockTape<double> tape;
    TensorD y = mdcb_forward(x, m.blocks[0], F, K, &tape);
    CHECK(tape.fusion_in.c() == F + units * K);
    CHECK(y.c() == F);
    CHECK_THROWS_AS(mdcb_forward(TensorD(1, F + 1, 4, 4), m.blocks[0], F, K), ShapeError);
  }

  SUBCASE("block gradients match finite differences") {
    TensorD x = random_tensor<double>(rng, 1, F, 3, 3);
    TensorD probe = random_tensor<double>(rng, 1, F, 3, 3);
    auto loss = [&]() { return dot(mdcb_forward(x, m.blocks[0], F, K), probe); };
    BlockTape<double> tape;
    (void)mdcb_forward(x, m.blocks[0], F, K, &tape);
    auto zero = ModelParams<double>::zeros_like(m);
    TensorD gin = mdcb_backward(probe, tape, m.blocks[0], F, K, zero.blocks[0]);

    CHECK(check_gradient(loss, tensor_slots(x), gin.data()).max_rel < 1e-4);
    for (int64_t u = 0; u < units; ++u) {
      auto& uw = m.blocks[0].units[size_t(u)].conv.weight;
      auto& gw = zero.blocks[0].units[size_t(u)].conv.weight;
      CHECK(check_gradient(loss, tensor_slots(uw), gw.data()).max_rel < 1e-4);
    }
    CHECK(check_gradient(loss, tensor_slots(m.blocks[0].fusion.weight),
                         zero.blocks[0].fusion.weight.data())
              .max_rel < 1e-4);
  }
}

TEST_CASE("full network forward") {
  RandomEngine rng(6);

  SUBCASE("shape law for both tail factors") {
    NetConfig c = micro_cfg();
    auto m2 = ModelParams<double>::init(c, 1);
    TensorD x = random_tensor<double>(rng, 1, 3, 10, 7, 0.0, 1.0);
    TensorD y2 = mdcn_forward(x, m2);
    CHECK(y2.shape() == Shape4{1, 3, 20, 14});

    c.scale = 3;
    auto m3 = ModelParams<double>::init(c, 1);
    TensorD y3 = mdcn_forward(x, m3);
    CHECK(y3.shape() == Shape4{1, 3, 30, 21});

    CHECK_THROWS_AS(mdcn_forward(TensorD(1, 5, 8, 8), m2), ShapeError);
  }

  SUBCASE("deterministic forward") {
    auto m = ModelParams<double>::init(micro_cfg(), 11);
    TensorD x = random_tensor<double>(rng, 1, 3, 6, 6, 0.0, 1.0);
    TensorD a = mdcn_forward(x, m);
    TensorD b = mdcn_forward(x, m);
    CHECK(a.data() == b.data());
  }

  SUBCASE("global skip flag changes the computation when enabled") {
    NetConfig c = micro_cfg();
    auto m = ModelParams<double>::init(c, 11);
    TensorD x = random_tensor<double>(rng, 1, 3, 6, 6, 0.0, 1.0);
    TensorD base = mdcn_forward(x, m);
    m.config.global_skip = true;
    TensorD skipped = mdcn_forward(x, m);
    CHECK(base.data() != skipped.data());
  }
}

TEST_CASE("end-to-end gradients on the micro config") {
  RandomEngine rng(9);
  auto m = ModelParams<double>::init(micro_cfg(), 54);
  randomize_biases(m, rng);
  TensorD x = random_tensor<double>(rng, 1, 3, 6, 6, 0.0, 1.0);
  TensorD probe = random_tensor<double>(rng, 1, 3, 12, 12);

  auto loss = [&]() { return dot(mdcn_forward(x, m), probe); };
  MdcnTape<double> tape;
  TensorD out = mdcn_forward(x, m, &tape);
  CHECK(dot(out, probe) == doctest::Approx(loss()).epsilon(1e-12));
  REQUIRE_MESSAGE(kink_margin(tape) > 5e-5, "seed places a pre-activation on the kink");

  const double h = 1e-6;
  auto grads = ModelParams<double>::zeros_like(m);
  TensorD gin = mdcn_backward(probe, tape, m, grads);
  CHECK(check_gradient(loss, tensor_slots(x), gin.data(), h).max_rel < 1e-4);

  auto ps = param_arrays(m);
  auto gs = param_arrays(grads);
  for (size_t k = 0; k < ps.size(); ++k) {
    INFO(ps[k].first);
    auto rep = check_gradient(loss, vector_slots(*ps[k].second), *gs[k].second, h);
    CHECK(rep.max_rel < 1e-4);
  }
}

TEST_CASE("gradients accumulate across backward calls") {
  RandomEngine rng(14);
  auto m = ModelParams<double>::init(micro_cfg(), 2);
  TensorD x = random_tensor<double>(rng, 1, 3, 4, 4, 0.0, 1.0);
  TensorD probe = random_tensor<double>(rng, 1, 3, 8, 8);
  MdcnTape<double> tape;
  (void)mdcn_forward(x, m, &tape);

  auto once = ModelParams<double>::zeros_like(m);
  (void)mdcn_backward(probe, tape, m, once);
  auto twice = ModelParams<double>::zeros_like(m);
  (void)mdcn_backward(probe, tape, m, twice);
  (void)mdcn_backward(probe, tape, m, twice);

  auto p1 = param_arrays(once), p2 = param_arrays(twice);
  for (size_t k = 0; k < p1.size(); ++k)
    for (size_t i = 0; i < p1[k].second->size(); ++i)
      CHECK((*p2[k].second)[i] == doctest::Approx(2.0 * (*p1[k].second)[i]).epsilon(1e-12));
}

TEST_CASE("scale recurrence") {
  RandomEngine rng(15);
  auto m = ModelParams<double>::init(micro_cfg(), 21);
  TensorD x = random_tensor<double>(rng, 1, 3, 5, 4, 0.0, 1.0);

  SUBCASE("factor 2 is one pass, factor 4 is the exact composition") {
    TensorD y2 = scale_recurrent_sr(x, m, 2);
    TensorD ref2 = mdcn_forward(x, m);
    CHECK(y2.data() == ref2.data());

    TensorD y4 = scale_recurrent_sr(x, m, 4);
    TensorD ref4 = mdcn_forward(mdcn_forward(x, m), m);
    CHECK(y4.data() == ref4.data());
    CHECK(y4.shape() == Shape4{1, 3, 20, 16});
  }

  SUBCASE("factor 8 composes three passes") {
    TensorD y8 = scale_recurrent_sr(x, m, 8);
    CHECK(y8.shape() == Shape4{1, 3, 40, 32});
  }

  SUBCASE("x3 uses its dedicated tail, no recurrence") {
    NetConfig c3 = micro_cfg();
    c3.scale = 3;
    auto m3 = ModelParams<double>::init(c3, 21);
    TensorD y3 = scale_recurrent_sr(x, m3, 3);
    CHECK(y3.data() == mdcn_forward(x, m3).data());
    CHECK_THROWS_AS(scale_recurrent_sr(x, m3, 2), ConfigError);
  }

  SUBCASE("unsupported factors are rejected") {
    CHECK_THROWS_AS(scale_recurrent_sr(x, m, 3), ConfigError);
    CHECK_THROWS_AS(scale_recurrent_sr(x, m, 5), ConfigError);
    CHECK_THROWS_AS(scale_recurrent_sr(x, m, 16), ConfigError);
  }

  SUBCASE("training-mode forward equals inference recurrence") {
    SrTape<double> tape;
    TensorD yt = sr_forward_training(x, m, 4, tape);
    CHECK(yt.data() == scale_recurrent_sr(x, m, 4).data());
    CHECK(tape.passes.size() == 2);
  }
}

TEST_CASE("gradients flow through the recurrence") {
  RandomEngine rng(16);
  auto m = ModelParams<double>::init(micro_cfg(), 23);
  randomize_biases(m, rng);
  TensorD x = random_tensor<double>(rng, 1, 3, 2, 2, 0.0, 1.0);
  TensorD probe = random_tensor<double>(rng, 1, 3, 8, 8);

  auto loss = [&]() { return dot(scale_recurrent_sr(x, m, 4), probe); };
  SrTape<double> tape;
  (void)sr_forward_training(x, m, 4, tape);
  REQUIRE_MESSAGE(kink_margin(tape) > 5e-5, "seed places a pre-activation on the kink");
  auto grads = ModelParams<double>::zeros_like(m);
  TensorD gin = sr_backward_training(probe, tape, m, grads);

  const double h = 1e-6;
  CHECK(check_gradient(loss, tensor_slots(x), gin.data(), h).max_rel < 1e-4);
  auto ps = param_arrays(m);
  auto gs = param_arrays(grads);
  for (size_t k = 0; k < ps.size(); ++k) {
    INFO(ps[k].first);
    CHECK(check_gradient(loss, vector_slots(*ps[k].second), *gs[k].second, h).max_rel <
          1e-4);
  }
}

TEST_CASE("video-width recurrence replicates the previous output") {
  RandomEngine rng(17);
  NetConfig vc = micro_cfg();
  vc.scale = 4;
  vc.in_channels = 15;
  auto mv = ModelParams<double>::init(vc, 31);
  randomize_biases(mv, rng);
  TensorD x = random_tensor<double>(rng, 1, 15, 2, 2, 0.0, 1.0);

  TensorD y1 = mdcn_forward(x, mv);
  TensorD manual = mdcn_forward(replicate_frames(y1, 5), mv);
  TensorD y = scale_recurrent_sr(x, mv, 4);
  CHECK(y.data() == manual.data());
  CHECK(y.shape() == Shape4{1, 3, 8, 8});

  SUBCASE("replicate and group-sum are adjoint") {
    TensorD a = random_tensor<double>(rng, 1, 3, 3, 3);
    TensorD b = random_tensor<double>(rng, 1, 15, 3, 3);
    CHECK(dot(replicate_frames(a, 5), b) ==
          doctest::Approx(dot(a, sum_frame_groups(b, 5))).epsilon(1e-12));
  }

  SUBCASE("gradients flow through the replication boundary") {
    TensorD probe = random_tensor<double>(rng, 1, 3, 8, 8);
    auto loss = [&]() { return dot(scale_recurrent_sr(x, mv, 4), probe); };
    SrTape<double> tape;
    (void)sr_forward_training(x, mv, 4, tape);
    REQUIRE_MESSAGE(kink_margin(tape) > 5e-5, "seed places a pre-activation on the kink");
    auto grads = ModelParams<double>::zeros_like(mv);
    TensorD gin = sr_backward_training(probe, tape, mv, grads);
    const double h = 1e-6;
    CHECK(gin.c() == 15);
    CHECK(check_gradient(loss, tensor_slots(x), gin.data(), h).max_rel < 1e-4);
    CHECK(check_gradient(loss, tensor_slots(mv.head0.weight), grads.head0.weight.data(), h)
              .max_rel < 1e-4);
    CHECK(check_gradient(loss, tensor_slots(mv.tail_out.weight),
                         grads.tail_out.weight.data(), h)
              .max_rel < 1e-4);
  }
}

TEST_CASE("warm start") {
  NetConfig c = micro_cfg();
  auto src = ModelParams<float>::init(c, 41);

  SUBCASE("same-config copy is exact") {
    auto dst = ModelParams<float>::init(c, 42);
    WarmStartSummary s = warm_start(dst, src);
    CHECK(s.adapted.empty());
    CHECK(s.skipped.empty());
    auto pa = param_arrays(dst), pb = param_arrays(src);
    for (size_t k = 0; k < pa.size(); ++k) CHECK(*pa[k].second == *pb[k].second);
  }

  SUBCASE("15-channel head adapts a 3-channel source by tiled fifths") {
    NetConfig vc = c;
    vc.in_channels = 15;
    auto dst = ModelParams<float>::init(vc, 43);
    WarmStartSummary s = warm_start(dst, src);
    REQUIRE(s.adapted == std::vector<std::string>{"head.0.weight"});
    CHECK(s.skipped.empty());
    for (int64_t co = 0; co < 4; ++co)
      for (int64_t rep = 0; rep < 5; ++rep)
        for (int64_t ci = 0; ci < 3; ++ci)
          for (int64_t kh = 0; kh < 3; ++kh)
            for (int64_t kw = 0; kw < 3; ++kw)
              CHECK(dst.head0.weight(co, rep * 3 + ci, kh, kw) ==
                    src.head0.weight(co, ci, kh, kw) / 5.0f);

    // The adapted head answers a static 5-frame window exactly like the
    // source head answers the single frame.
    RandomEngine rng(44);
    TensorF frame = random_tensor<float>(rng, 1, 3, 4, 4, 0.0, 1.0);
    TensorF via_video = conv2d(replicate_frames(frame, 5), dst.head0, 1);
    TensorF via_image = conv2d(frame, src.head0, 1);
    for (int64_t i = 0; i < via_image.numel(); ++i)
      CHECK(via_video.data()[size_t(i)] ==
            doctest::Approx(via_image.data()[size_t(i)]).epsilon(1e-5));
  }

  SUBCASE("structurally missing tensors are reported, not guessed") {
    NetConfig big = c;
    big.blocks = 2;
    auto dst = ModelParams<float>::init(big, 45);
    WarmStartSummary s = warm_start(dst, src);
    CHECK(std::find(s.skipped.begin(), s.skipped.end(), "block.1.fusion.weight") !=
          s.skipped.end());
    CHECK(std::find(s.copied.begin(), s.copied.end(), "block.0.fusion.weight") !=
          s.copied.end());
  }
}
