// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "fgt2m/common/error.hpp"
#include "fgt2m/fusion_denoiser/denoiser.hpp"

namespace fgt2m::fusion_denoiser {
namespace {

using namespace numerics;

Tensor randn(Rng& rng, Shape s, double scale = 1.0) {
  Tensor t = rng.normal_tensor(s);
  for (double& v : t.data()) v *= scale;
  return t;
}

// Plain loops, no autodiff.
Tensor mm(const Tensor& a, const Tensor& b) {
  Tensor out({a.rows(), b.cols()}, 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k)
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += a(i, k) * b(k, j);
  return out;
}

Tensor tr(const Tensor& a) {
  Tensor out({a.cols(), a.rows()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Tensor stack(const std::vector<Tensor>& parts) {
  std::size_t rows = 0;
  for (const auto& p : parts) rows += p.rows();
  Tensor out({rows, parts.front().cols()});
  std::size_t r = 0;
  for (const auto& p : parts)
    for (std::size_t i = 0; i < p.rows(); ++i, ++r)
      for (std::size_t c = 0; c < p.cols(); ++c) out(r, c) = p(i, c);
  return out;
}

Tensor softmax_rows(Tensor a) {
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double mx = -1e300, z = 0;
    for (std::size_t j = 0; j < a.cols(); ++j) mx = std::max(mx, a(i, j));
    for (std::size_t j = 0; j < a.cols(); ++j) z += std::exp(a(i, j) - mx);
    for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) = std::exp(a(i, j) - mx) / z;
  }
  return a;
}

TextFeatures random_text(Rng& rng, std::size_t nl, std::size_t nt, std::size_t w) {
  TextFeatures f;
  f.W_l = constant(randn(rng, {nl, w}, 0.5));
  f.W_t = constant(randn(rng, {nt, w}, 0.5));
  f.S_l = constant(randn(rng, {1, w}, 0.5));
  f.S_t = constant(randn(rng, {1, w}, 0.5));
  f.mask_l.assign(nl, true);
  f.mask_t.assign(nt, true);
  return f;
}

double worst_error(ParameterStore& store, const std::function<Var(Binder&)>& loss) {
  Binder b(store, true);
  auto grads = b.collect(backward(loss(b)));
  double worst = 0.0;
  for (const auto& name : store.names()) {
    const Tensor original = store.get(name);
    auto f = [&](const Tensor& x) {
      store.set(name, x);
      Binder fb(store, false);
      double v = loss(fb).value().item();
      store.set(name, original);
      return v;
    };
    Tensor an = grads.count(name) ? grads.at(name) : Tensor::zeros(original.shape());
    const double e = max_relative_error(an, richardson_gradient(f, original));
    if (e > 1e-4) {
      Tensor fd = richardson_gradient(f, original);
      for (std::size_t i = 0; i < an.size(); ++i)
        if (std::abs(an[i] - fd[i]) / std::max({std::abs(an[i]), std::abs(fd[i]), 1e-8}) > 1e-4)
          ADD_FAILURE() << name << "[" << i << "] " << an[i] << " vs " << fd[i];
    }
    worst = std::max(worst, e);
  }
  return worst;
}

TEST(SentenceFusion, ZeroLambdasAreIdentity) {
  Rng rng(1);
  Tensor x = randn(rng, {5, 4});
  Var y = sentence_fusion(constant(x), constant(randn(rng, {1, 4})), constant(randn(rng, {1, 4})),
                          constant(Tensor({1, 1}, 0.0)), constant(Tensor({1, 1}, 0.0)));
  EXPECT_EQ(y.value(), x);
}

TEST(SentenceFusion, ZeroParsedSentenceHalvesGate) {
  Rng rng(2);
  Tensor x = randn(rng, {5, 4});
  Var y = sentence_fusion(constant(x), constant(Tensor({1, 4}, 0.0)), constant(Tensor({1, 4}, 0.0)),
                          constant(Tensor({1, 1}, 0.3)), constant(Tensor({1, 1}, 0.2)));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y.value()[i], x[i] * (1 + 0.5 * 0.3 + 0.5 * 0.2), 1e-15);
}

TEST(SentenceFusion, MatchesDenseOracle) {
  Rng rng(3);
  Tensor x = randn(rng, {6, 5}), sl = randn(rng, {1, 5}), sp = randn(rng, {1, 5});
  const double ll = 0.37, lp = 0.11;
  Var y = sentence_fusion(constant(x), constant(sl), constant(sp), constant(Tensor({1, 1}, ll)),
                          constant(Tensor({1, 1}, lp)));
  Tensor al = mm(x, tr(sl)), ap = mm(x, tr(sp));
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t c = 0; c < 5; ++c) {
      const double e = x(i, c) + ll * x(i, c) / (1 + std::exp(-al(i, 0))) + lp * x(i, c) / (1 + std::exp(-ap(i, 0)));
      EXPECT_NEAR(y.value()(i, c), e, 1e-14);
    }
}

TEST(SentenceFusion, NormGrowsWithLambda) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    Tensor x = randn(rng, {4, 3}), sl = randn(rng, {1, 3}), sp = randn(rng, {1, 3});
    const double lo = rng.uniform(0.0, 1.0), hi = lo + rng.uniform(0.01, 1.0), lp = rng.uniform(0.0, 1.0);
    Tensor a = sentence_fusion(constant(x), constant(sl), constant(sp), constant(Tensor({1, 1}, lo)),
                               constant(Tensor({1, 1}, lp))).value();
    Tensor b = sentence_fusion(constant(x), constant(sl), constant(sp), constant(Tensor({1, 1}, hi)),
                               constant(Tensor({1, 1}, lp))).value();
    for (std::size_t i = 0; i < 4; ++i) {
      double na = 0, nb = 0;
      for (std::size_t c = 0; c < 3; ++c) na += a(i, c) * a(i, c), nb += b(i, c) * b(i, c);
      EXPECT_GT(nb, na);
    }
  }
}

TEST(SentenceFusion, GradientCheck) {
  Rng rng(5);
  ParameterStore s;
  s.add("x", randn(rng, {4, 3}));
  s.add("sl", randn(rng, {1, 3}));
  s.add("sp", randn(rng, {1, 3}));
  s.add("ll", Tensor({1, 1}, 0.3));
  s.add("lp", Tensor({1, 1}, 0.2));
  Tensor r = randn(rng, {4, 3});
  auto loss = [&](Binder& b) {
    return sum(mul(sentence_fusion(b("x"), b("sl"), b("sp"), b("ll"), b("lp")), constant(r)));
  };
  EXPECT_LT(worst_error(s, loss), 1e-4);
}

TEST(WordFusion, ZeroProjectionsGiveZero) {
  Rng rng(6);
  ParameterStore s;
  init_word_fusion(s, rng, "w", 4);
  for (const auto& n : s.names()) s.set(n, Tensor::zeros(s.get(n).shape()));
  Binder b(s, false);
  Var y = word_fusion(b, "w", constant(randn(rng, {5, 4})), random_text(rng, 3, 2, 4));
  EXPECT_EQ(y.value(), Tensor({5, 4}, 0.0));
}

TEST(WordFusion, DegenerateSizes) {
  Rng rng(7);
  ParameterStore s;
  init_word_fusion(s, rng, "w", 6);
  Binder b(s, false);
  Var y = word_fusion(b, "w", constant(randn(rng, {1, 6})), random_text(rng, 1, 1, 6));
  EXPECT_EQ(y.shape(), (Shape{1, 6}));
}

TEST(WordFusion, MatchesDenseOracle) {
  Rng rng(8);
  const std::size_t w = 5;
  ParameterStore s;
  init_word_fusion(s, rng, "w", w);
  Binder b(s, false);
  Tensor x = randn(rng, {4, w});
  TextFeatures f = random_text(rng, 3, 2, w);
  Var y = word_fusion(b, "w", constant(x), f);

  auto g = [&](const char* n) { return s.get(std::string("w.") + n); };
  Tensor rl = mm(f.S_l.value(), g("m_l")), rt = mm(f.S_t.value(), g("m_t"));
  Tensor lt = stack({f.W_l.value(), rt}), tl = stack({f.W_t.value(), rl});
  Tensor value = stack({mm(x, g("v_m")), mm(lt, g("v_l")), mm(tl, g("v_t"))});
  Tensor key = stack({mm(x, g("k_m")), mm(lt, g("k_l")), mm(tl, g("k_t"))});
  Tensor templ = mm(softmax_rows(tr(key)), value);
  Tensor expect = mm(softmax_rows(mm(x, g("q_m"))), templ);
  EXPECT_LT(max_abs_diff(y.value(), expect), 1e-10);
}

TEST(WordFusion, ChannelJoinShapes) {
  Rng rng(9);
  ParameterStore s;
  init_word_fusion(s, rng, "w", 4, ReferenceJoin::kChannels);
  EXPECT_EQ(s.get("w.v_l").shape(), (Shape{8, 4}));
  Binder b(s, false);
  Var y = word_fusion(b, "w", constant(randn(rng, {3, 4})), random_text(rng, 2, 5, 4), ReferenceJoin::kChannels);
  EXPECT_EQ(y.shape(), (Shape{3, 4}));
}

TEST(WordFusion, FramePermutationEquivariant) {
  Rng rng(10);
  ParameterStore s;
  init_word_fusion(s, rng, "w", 4);
  Binder b(s, false);
  Tensor x = randn(rng, {5, 4});
  TextFeatures f = random_text(rng, 3, 2, 4);
  const std::vector<std::size_t> perm = {2, 4, 0, 1, 3};
  Tensor xp({5, 4});
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t c = 0; c < 4; ++c) xp(perm[i], c) = x(i, c);
  Tensor y = word_fusion(b, "w", constant(x), f).value();
  Tensor yp = word_fusion(b, "w", constant(xp), f).value();
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(yp(perm[i], c), y(i, c), 1e-13);
}

TEST(WordFusion, MaskedWordsAreIgnored) {
  Rng rng(11);
  ParameterStore s;
  init_word_fusion(s, rng, "w", 4);
  Binder b(s, false);
  Tensor x = randn(rng, {3, 4});
  TextFeatures f = random_text(rng, 2, 2, 4);
  TextFeatures padded = f;
  Tensor wl = stack({f.W_l.value(), randn(rng, {2, 4}, 30.0)});
  padded.W_l = constant(wl);
  padded.mask_l = {true, true, false, false};
  EXPECT_LT(max_abs_diff(word_fusion(b, "w", constant(x), f).value(), word_fusion(b, "w", constant(x), padded).value()),
            1e-12);
}

TEST(WordFusion, GradientCheck) {
  Rng rng(12);
  ParameterStore s;
  init_word_fusion(s, rng, "w", 4);
  s.add("x", randn(rng, {3, 4}));
  s.add("wl", randn(rng, {2, 4}));
  s.add("wt", randn(rng, {3, 4}));
  s.add("sl", randn(rng, {1, 4}));
  s.add("st", randn(rng, {1, 4}));
  Tensor r = randn(rng, {3, 4});
  auto loss = [&](Binder& b) {
    TextFeatures f{b("wl"), b("wt"), b("sl"), b("st"), {true, true}, {true, true, true}};
    return sum(mul(word_fusion(b, "w", b("x"), f), constant(r)));
  };
  EXPECT_LT(worst_error(s, loss), 1e-4);
}

DenoiserConfig tiny() {
  DenoiserConfig cfg;
  cfg.motion_dim = 16;
  cfg.d_model = 16;
  cfg.blocks = 2;
  cfg.heads = 4;
  cfg.max_frames = 8;
  return cfg;
}

ParameterStore denoiser_store(const DenoiserConfig& cfg, Rng& rng) {
  ParameterStore s;
  init_denoiser(s, rng, cfg);
  for (const char* n : {"null.W_l", "null.W_t", "null.S_l", "null.S_t"}) s.add(n, randn(rng, {1, cfg.d_model}, 0.1));
  return s;
}

TEST(Denoiser, OutputShapeMatchesInput) {
  Rng rng(13);
  auto cfg = tiny();
  auto s = denoiser_store(cfg, rng);
  Binder b(s, false);
  TextFeatures f = random_text(rng, 3, 4, 16);
  for (std::size_t frames : {1u, 4u, 8u}) {
    Var y = denoiser_forward(b, cfg, constant(randn(rng, {frames, 16})), 7, &f);
    EXPECT_EQ(y.shape(), (Shape{frames, 16}));
  }
  EXPECT_THROW(denoiser_forward(b, cfg, constant(randn(rng, {9, 16})), 7, &f), Error);
  EXPECT_THROW(denoiser_forward(b, cfg, constant(randn(rng, {4, 15})), 7, &f), Error);
  EXPECT_THROW(denoiser_forward(b, cfg, constant(randn(rng, {4, 16})), 0, &f), Error);
  EXPECT_THROW(denoiser_forward(b, cfg, constant(randn(rng, {4, 16})), 1001, &f), Error);
}

TEST(Denoiser, NullPathIgnoresText) {
  Rng rng(14);
  auto cfg = tiny();
  auto s = denoiser_store(cfg, rng);
  Binder b(s, false);
  Tensor x = randn(rng, {4, 16});
  Tensor u = denoiser_forward(b, cfg, constant(x), 30, nullptr).value();
  TextFeatures a = random_text(rng, 3, 4, 16), c = random_text(rng, 5, 2, 16);
  Tensor ya = denoiser_forward(b, cfg, constant(x), 30, &a).value();
  Tensor yc = denoiser_forward(b, cfg, constant(x), 30, &c).value();
  EXPECT_GT(max_abs_diff(ya, yc), 1e-6);
  EXPECT_GT(max_abs_diff(ya, u), 1e-6);
  EXPECT_EQ(denoiser_forward(b, cfg, constant(x), 30, nullptr).value(), u);
}

TEST(Denoiser, Deterministic) {
  auto cfg = tiny();
  Rng r1(15), r2(15);
  auto s1 = denoiser_store(cfg, r1);
  auto s2 = denoiser_store(cfg, r2);
  Binder b1(s1, false), b2(s2, false);
  Rng d(16);
  Tensor x = randn(d, {5, 16});
  TextFeatures f = random_text(d, 2, 3, 16);
  EXPECT_EQ(denoiser_forward(b1, cfg, constant(x), 500, &f).value(),
            denoiser_forward(b2, cfg, constant(x), 500, &f).value());
}

TEST(Denoiser, GradientCheck) {
  auto cfg = tiny();
  Rng rng(17);
  auto s = denoiser_store(cfg, rng);
  // Move the gates off their initial values so every parameter is exercised.
  s.set("den.block.0.lambda_l", Tensor({1, 1}, 0.4));
  s.add("wl", randn(rng, {2, 16}, 0.5));
  s.add("wt", randn(rng, {3, 16}, 0.5));
  s.add("sl", randn(rng, {1, 16}, 0.5));
  s.add("st", randn(rng, {1, 16}, 0.5));
  Tensor x = randn(rng, {4, 16});
  Tensor r = randn(rng, {4, 16});
  auto loss = [&](Binder& b) {
    TextFeatures f{b("wl"), b("wt"), b("sl"), b("st"), {true, true}, {true, true, true}};
    return sum(mul(denoiser_forward(b, cfg, constant(x), 12, &f), constant(r)));
  };
  EXPECT_LT(worst_error(s, loss), 1e-4);
}

TEST(Sinusoid, KnownValues) {
  Tensor e = sinusoidal_embedding(0.0, 4);
  EXPECT_EQ(e, Tensor::matrix({{0.0, 1.0, 0.0, 1.0}}));
  Tensor f = sinusoidal_embedding(2.0, 4);
  EXPECT_NEAR(f(0, 0), std::sin(2.0), 1e-15);
  EXPECT_NEAR(f(0, 3), std::cos(2.0 / 100.0), 1e-15);
}

}  // namespace
}  // namespace fgt2m::fusion_denoiser
