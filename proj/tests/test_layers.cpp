#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "support/conv_oracle.hpp"
#include "ulo/layers.hpp"
#include "ulo/rng.hpp"

using namespace ulo;

namespace {

Tensor random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t = Tensor::uninit(std::move(s));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.shape() == b.shape());
  double m = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

UloConv2d make_conv(int64_t co, int64_t ci, int64_t k, int64_t stride,
                    int64_t pad, LogicMode mode, uint64_t seed) {
  Rng rng(seed);
  return UloConv2d("conv", co, ci, k, k, stride, pad, mode, rng);
}

}  // namespace

TEST_CASE("fixed AND equals 1/K-scaled direct convolution plus bias") {
  // >= 20 random shape/seed combinations
  Rng shapes(2024);
  for (int trial = 0; trial < 24; ++trial) {
    const int64_t ci = 1 + shapes.below(4);
    const int64_t co = 1 + shapes.below(6);
    const int64_t k = 1 + 2 * shapes.below(2);  // 1 or 3
    const int64_t stride = 1 + shapes.below(2);
    const int64_t pad = shapes.below(2);
    const int64_t h = k + shapes.below(6);
    const int64_t w = k + shapes.below(6);
    const int64_t n = 1 + shapes.below(3);

    UloConv2d layer = make_conv(co, ci, k, stride, pad,
                                LogicMode::fixed({OpKind::And, Polarity::Positive}),
                                1000 + trial);
    Rng data(7000 + trial);
    for (int64_t i = 0; i < co; ++i) layer.bias.value[i] = data.uniform(-1, 1);
    Tensor x = random_tensor({n, ci, h, w}, data);

    Tape t;
    Value out = layer.forward(t, t.leaf(x));
    Tensor ref = testsupport::direct_conv(x, layer.w.value,
                                          layer.bias.value.data(), stride, pad,
                                          /*scale_by_k=*/true);
    CHECK(max_abs_diff(t.val(out), ref) < 1e-10);
  }
}

TEST_CASE("gamma-only layer is a box filter independent of the weights") {
  Rng rng(5);
  UloConv2d layer = make_conv(3, 2, 3, 1, 0,
                              LogicMode::learnable(LogicInit::random()), 77);
  for (int64_t i = 0; i < 3; ++i) {
    layer.logic.value[i * 3 + 0] = 0.0;
    layer.logic.value[i * 3 + 1] = 0.0;
    layer.logic.value[i * 3 + 2] = 1.0;
    layer.bias.value[i] = 0.0;
  }
  Tensor x = random_tensor({2, 2, 6, 6}, rng);
  Tape t;
  const Tensor& out = t.val(layer.forward(t, t.leaf(x)));

  // box-filter mean over each receptive field, same for every kernel
  const int64_t oh = 4, ow = 4;
  for (int64_t n = 0; n < 2; ++n) {
    for (int64_t oy = 0; oy < oh; ++oy) {
      for (int64_t ox = 0; ox < ow; ++ox) {
        double mean = 0.0;
        for (int64_t c = 0; c < 2; ++c)
          for (int64_t ky = 0; ky < 3; ++ky)
            for (int64_t kx = 0; kx < 3; ++kx)
              mean += x.at4(n, c, oy + ky, ox + kx);
        mean /= 18.0;
        for (int64_t o = 0; o < 3; ++o) {
          CHECK(out.at4(n, o, oy, ox) == doctest::Approx(mean).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("beta-only layer is constant mean(w) at every position") {
  Rng rng(6);
  UloConv2d layer = make_conv(2, 1, 3, 1, 0,
                              LogicMode::learnable(LogicInit::random()), 88);
  for (int64_t i = 0; i < 2; ++i) {
    layer.logic.value[i * 3 + 0] = 0.0;
    layer.logic.value[i * 3 + 1] = 1.0;
    layer.logic.value[i * 3 + 2] = 0.0;
    layer.bias.value[i] = 0.0;
  }
  Tensor x = random_tensor({1, 1, 5, 5}, rng);
  Tape t;
  const Tensor& out = t.val(layer.forward(t, t.leaf(x)));
  for (int64_t o = 0; o < 2; ++o) {
    double wmean = 0.0;
    for (int64_t i = 0; i < 9; ++i) wmean += layer.w.value[o * 9 + i];
    wmean /= 9.0;
    for (int64_t p = 0; p < 9; ++p) {
      CHECK(out[o * 9 + p] == doctest::Approx(wmean).epsilon(1e-12));
    }
  }
}

TEST_CASE("operator composition: XOR output = OR output - AND output") {
  Rng rng(9);
  UloConv2d and_l = make_conv(4, 3, 3, 1, 1,
                              LogicMode::fixed({OpKind::And, Polarity::Positive}), 3);
  UloConv2d or_l = make_conv(4, 3, 3, 1, 1,
                             LogicMode::fixed({OpKind::Or, Polarity::Positive}), 3);
  UloConv2d xor_l = make_conv(4, 3, 3, 1, 1,
                              LogicMode::fixed({OpKind::Xor, Polarity::Positive}), 3);
  // share weights, zero bias
  or_l.w.value = and_l.w.value.clone();
  xor_l.w.value = and_l.w.value.clone();
  for (auto* l : {&and_l, &or_l, &xor_l}) l->bias.value.fill(0.0);

  Tensor x = random_tensor({2, 3, 7, 7}, rng);
  Tape t;
  const Tensor& a = t.val(and_l.forward(t, t.leaf(x)));
  const Tensor& o = t.val(or_l.forward(t, t.leaf(x)));
  const Tensor& e = t.val(xor_l.forward(t, t.leaf(x)));
  for (int64_t i = 0; i < a.numel(); ++i) {
    CHECK(std::fabs(e[i] - (o[i] - a[i])) <= 1e-12);
  }
}

TEST_CASE("layer output is affine in the logical parameters") {
  Rng rng(21);
  UloConv2d layer = make_conv(3, 2, 3, 1, 1,
                              LogicMode::learnable(LogicInit::random()), 31);
  Tensor x = random_tensor({2, 2, 5, 5}, rng);
  Tensor theta1 = random_tensor({3, 3}, rng, -2.0, 2.0);
  Tensor theta2 = random_tensor({3, 3}, rng, -2.0, 2.0);

  auto eval_with = [&](const Tensor& th) {
    layer.logic.value = th.clone();
    Tape t;
    return t.val(layer.forward(t, t.leaf(x))).clone();
  };
  Tensor y1 = eval_with(theta1);
  Tensor y2 = eval_with(theta2);
  Tensor mid = Tensor::uninit({3, 3});
  for (int64_t i = 0; i < 9; ++i) mid[i] = 0.5 * (theta1[i] + theta2[i]);
  Tensor ym = eval_with(mid);
  for (int64_t i = 0; i < ym.numel(); ++i) {
    CHECK(std::fabs(ym[i] - 0.5 * (y1[i] + y2[i])) <= 1e-12);
  }
}

TEST_CASE("per-kernel granularity: kernel o's triple only moves channel o") {
  Rng rng(33);
  UloConv2d layer = make_conv(4, 2, 3, 1, 1,
                              LogicMode::learnable(LogicInit::random()), 44);
  Tensor x = random_tensor({1, 2, 6, 6}, rng);
  Tape t0;
  Tensor base = t0.val(layer.forward(t0, t0.leaf(x))).clone();

  layer.logic.value[2 * 3 + 0] += 0.5;  // kernel 2, alpha
  Tape t1;
  const Tensor& bumped = t1.val(layer.forward(t1, t1.leaf(x)));
  for (int64_t c = 0; c < 4; ++c) {
    double diff = 0.0;
    for (int64_t p = 0; p < 36; ++p) {
      diff += std::fabs(bumped[(c)*36 + p] - base[(c)*36 + p]);
    }
    if (c == 2) {
      CHECK(diff > 1e-6);
    } else {
      CHECK(diff == 0.0);
    }
  }
}

TEST_CASE("ulo dense forward examples") {
  SUBCASE("AND mode on all-ones") {
    Rng rng(1);
    UloDense d("fc", 1, 2, LogicMode::fixed({OpKind::And, Polarity::Positive}), rng);
    d.w.value = Tensor::from({1, 2}, {1, 1});
    d.bias.value.fill(0.0);
    Tape t;
    const Tensor& out = t.val(d.forward(t, t.leaf(Tensor::from({1, 2}, {1, 1}))));
    CHECK(out[0] == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("XOR mode hand evaluation") {
    Rng rng(1);
    UloDense d("fc", 1, 2, LogicMode::fixed({OpKind::Xor, Polarity::Positive}), rng);
    d.w.value = Tensor::from({1, 2}, {1, 0});
    d.bias.value.fill(0.0);
    Tape t;
    const Tensor& out = t.val(d.forward(t, t.leaf(Tensor::from({1, 2}, {1, 0}))));
    // (-2/2)(1) + 1*(0.5) + 1*(0.5) = 0
    CHECK(out[0] == doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("zero input passes the bias through in AND mode") {
    Rng rng(2);
    UloDense d("fc", 3, 5, LogicMode::fixed({OpKind::And, Polarity::Positive}), rng);
    Tape t;
    const Tensor& out = t.val(d.forward(t, t.leaf(Tensor::zeros({2, 5}))));
    for (int64_t n = 0; n < 2; ++n)
      for (int64_t u = 0; u < 3; ++u)
        CHECK(out.at2(n, u) == doctest::Approx(d.bias.value[u]).epsilon(1e-15));
  }
  SUBCASE("fan-in mismatch") {
    Rng rng(3);
    UloDense d("fc", 2, 4, LogicMode::fixed({OpKind::And, Polarity::Positive}), rng);
    Tape t;
    CHECK_THROWS_AS(d.forward(t, t.leaf(Tensor::zeros({1, 5}))), ShapeError);
  }
}

TEST_CASE("init_logic") {
  SUBCASE("as_operator AND sets every triple and leaves bias") {
    Rng rng(10);
    UloConv2d layer = make_conv(5, 2, 3, 1, 1,
                                LogicMode::learnable(LogicInit::random()), 11);
    layer.bias.value.fill(0.25);
    init_logic(layer, LogicInit::as_operator({OpKind::And, Polarity::Positive}), rng);
    for (int64_t i = 0; i < 5; ++i) {
      CHECK(layer.logic.value[i * 3 + 0] == 1.0);
      CHECK(layer.logic.value[i * 3 + 1] == 0.0);
      CHECK(layer.logic.value[i * 3 + 2] == 0.0);
      CHECK(layer.bias.value[i] == 0.25);  // AND has b = 0
    }
  }
  SUBCASE("as_operator MP folds b = 0.5 into the bias") {
    Rng rng(10);
    UloConv2d layer = make_conv(4, 1, 3, 1, 1,
                                LogicMode::learnable(LogicInit::random()), 12);
    layer.bias.value.fill(0.0);
    init_logic(layer, LogicInit::as_operator({OpKind::Mp, Polarity::Positive}), rng);
    for (int64_t i = 0; i < 4; ++i) {
      CHECK(layer.logic.value[i * 3 + 0] == 1.0);
      CHECK(layer.logic.value[i * 3 + 1] == 0.0);
      CHECK(layer.logic.value[i * 3 + 2] == -0.5);
      CHECK(layer.bias.value[i] == 0.5);
    }
  }
  SUBCASE("random init is deterministic per seed") {
    UloConv2d a = make_conv(3, 2, 3, 1, 1,
                            LogicMode::learnable(LogicInit::random()), 500);
    UloConv2d b = make_conv(3, 2, 3, 1, 1,
                            LogicMode::learnable(LogicInit::random()), 500);
    for (int64_t i = 0; i < a.logic.value.numel(); ++i) {
      CHECK(a.logic.value[i] == b.logic.value[i]);
    }
  }
  SUBCASE("fixed mode rejects init_logic") {
    Rng rng(1);
    UloConv2d layer = make_conv(2, 1, 3, 1, 0,
                                LogicMode::fixed({OpKind::And, Polarity::Positive}), 5);
    CHECK_THROWS_AS(init_logic(layer, LogicInit::random(), rng), ContractError);
  }
}

TEST_CASE("fixed mode produces no logic gradient, learnable does") {
  Rng rng(40);
  Tensor x = random_tensor({1, 1, 4, 4}, rng);

  UloConv2d fixed = make_conv(1, 1, 3, 1, 0,
                              LogicMode::fixed({OpKind::And, Polarity::Positive}), 41);
  {
    Tape t;
    Value out = fixed.forward(t, t.leaf(x));
    Value loss = ops::mean(t, out, {0, 1, 2, 3});
    t.backward(loss);
    for (int64_t i = 0; i < 3; ++i) CHECK(fixed.logic.grad[i] == 0.0);
    // weights still learn
    double gsum = 0.0;
    for (int64_t i = 0; i < 9; ++i) gsum += std::fabs(fixed.w.grad[i]);
    CHECK(gsum > 0.0);
  }

  UloConv2d learn = make_conv(1, 1, 3, 1, 0,
                              LogicMode::learnable(LogicInit::random()), 42);
  {
    Tape t;
    Value out = learn.forward(t, t.leaf(x));
    Value loss = ops::mean(t, out, {0, 1, 2, 3});
    t.backward(loss);
    double gsum = 0.0;
    for (int64_t i = 0; i < 3; ++i) gsum += std::fabs(learn.logic.grad[i]);
    CHECK(gsum > 0.0);
  }
}

TEST_CASE("gamma gradient equals the sum of patch means") {
  // upstream gradient of all ones on a 1x1x4x4 input, 3x3 kernel: the
  // gamma adjoint is sum over positions of mean(x_patch)
  Rng rng(50);
  UloConv2d layer = make_conv(1, 1, 3, 1, 0,
                              LogicMode::learnable(LogicInit::random()), 51);
  Tensor x = random_tensor({1, 1, 4, 4}, rng);

  Tape t;
  Value out = layer.forward(t, t.leaf(x));
  // mean * numel = sum, so upstream grad of all ones
  Value loss = ops::scale(t, ops::mean(t, out, {0, 1, 2, 3}), 4.0);
  t.backward(loss);

  double expected = 0.0;
  for (int64_t oy = 0; oy < 2; ++oy) {
    for (int64_t ox = 0; ox < 2; ++ox) {
      double mean = 0.0;
      for (int64_t ky = 0; ky < 3; ++ky)
        for (int64_t kx = 0; kx < 3; ++kx) mean += x.at4(0, 0, oy + ky, ox + kx);
      expected += mean / 9.0;
    }
  }
  CHECK(layer.logic.grad[2] == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("conv gradients pass finite differences for every class") {
  Rng rng(60);
  UloConv2d layer = make_conv(2, 2, 3, 2, 1,
                              LogicMode::learnable(LogicInit::random()), 61);
  Parameter x("x", random_tensor({2, 2, 5, 5}, rng));

  auto builder = [&](Tape& t) {
    Value out = layer.forward(t, t.param(x));
    Value act = ops::relu(t, out);
    return ops::mean(t, act, {0, 1, 2, 3});
  };
  auto report = gradient_check(
      builder, {&x, &layer.w, &layer.bias, &layer.logic}, 1e-5, 1e-4);
  if (!report.all_ok) {
    for (const auto& e : report.flagged) {
      MESSAGE(e.param, "[", e.index, "]: analytic ", e.analytic, " numeric ",
              e.numeric);
    }
  }
  CHECK(report.all_ok);
  CHECK(report.checked > 0);
}

TEST_CASE("single-kernel alpha finite difference") {
  Rng rng(62);
  UloConv2d layer = make_conv(1, 1, 3, 1, 0,
                              LogicMode::learnable(LogicInit::random()), 63);
  Parameter x("x", random_tensor({1, 1, 5, 5}, rng));
  auto builder = [&](Tape& t) {
    Value out = layer.forward(t, t.param(x));
    return ops::mean(t, out, {0, 1, 2, 3});
  };
  auto report = gradient_check(builder, {&layer.logic}, 1e-5, 1e-4);
  CHECK(report.all_ok);
}

TEST_CASE("dense gradients pass finite differences for every class") {
  Rng rng(70);
  UloDense layer("fc", 4, 6, LogicMode::learnable(LogicInit::random()), rng);
  Parameter x("x", random_tensor({3, 6}, rng));
  std::vector<int32_t> labels = {1, 0, 3};

  auto builder = [&](Tape& t) {
    Value out = layer.forward(t, t.param(x));
    return ops::softmax_cross_entropy(t, out, labels);
  };
  auto report = gradient_check(
      builder, {&x, &layer.w, &layer.bias, &layer.logic}, 1e-5, 1e-4);
  CHECK(report.all_ok);
}

TEST_CASE("channel mismatch raises a dimension error") {
  UloConv2d layer = make_conv(2, 3, 3, 1, 1,
                              LogicMode::fixed({OpKind::And, Polarity::Positive}), 80);
  Tape t;
  CHECK_THROWS_AS(layer.forward(t, t.leaf(Tensor::zeros({1, 2, 5, 5}))), ShapeError);
}
