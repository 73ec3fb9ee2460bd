// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "eadvc/miest.hpp"
#include "eadvc/nn/ops.hpp"
#include "testutil.hpp"

using namespace eadvc;
using namespace eadvc::nn;
using namespace eadvc::miest;
using eadvc::testutil::fd_check;
using eadvc::testutil::random_mat;

namespace {

Critic constant_critic(ParamStore& store, int dx, int dy, double value, Rng& rng) {
  Critic c = Critic::create(store, "const", dx, dy, 8, rng);
  c.fc1.w.raw_value().setZero();
  c.fc1.b.raw_value().setZero();
  c.fc2.w.raw_value().setZero();
  c.fc2.b.raw_value()(0, 0) = value;
  return c;
}

}  // namespace

TEST(CriticLoss, ConstantCriticIsZero) {
  Rng rng(51);
  ParamStore store;
  Critic c = constant_critic(store, 3, 2, 1.7, rng);
  Tensor x(random_mat(rng, 8, 3)), y(random_mat(rng, 8, 2));
  EXPECT_NEAR(critic_loss(c, x, y).item(), 0.0, 1e-12);
  EXPECT_NEAR(ifub_loss(c, x, y, false).item(), 0.0, 1e-13);
  EXPECT_THROW(critic_loss(c, Tensor(random_mat(rng, 1, 3)), Tensor(random_mat(rng, 1, 2))),
               Error);  // N < 2
}

TEST(CriticLoss, DiagonalDominantClosedForm) {
  // f(x_i, y_j) = 10 * delta_ij at N=2:
  // L = log(e^10 / ((e^10 + 1)/2)) = 10 - log((e^10 + 1)/2)
  Rng rng(52);
  ParamStore store;
  // hand-built critic on 1-D inputs over {0,1}: f = 10 * (x*y + (1-x)*(1-y))
  // is awkward with tanh, so exercise the loss formula through score_pairs of
  // a linear-in-products surrogate: instead verify against a direct critic
  // trained to saturation is unnecessary — craft inputs so the MLP output
  // matches 10*delta closely is fragile. Drop to the formula level: feed a
  // crafted pair matrix through the same reduction the loss uses.
  Tensor pairs(Mat((Mat(2, 2) << 10.0, 0.0, 0.0, 10.0).finished()));
  Tensor joint = mean_all(diag_col(pairs));
  Tensor marg = mean_all(logsumexp_rows(pairs));
  const double loss = joint.item() - marg.item() + std::log(2.0);
  const double want = 10.0 - std::log((std::exp(10.0) + 1.0) / 2.0);
  EXPECT_NEAR(loss, want, 1e-12);
  EXPECT_NEAR(want, 0.6930, 2e-4);
}

TEST(CriticLoss, Gradients) {
  Rng rng(53);
  ParamStore store;
  Critic c = Critic::create(store, "c", 3, 2, 8, rng);
  Tensor x(random_mat(rng, 6, 3), true), y(random_mat(rng, 6, 2), true);
  auto f = [&] { return critic_loss(c, x, y); };
  EXPECT_LT(fd_check(f, x), 1e-6);
  EXPECT_LT(fd_check(f, y), 1e-6);
  EXPECT_LT(fd_check(f, c.fc1.w), 1e-6);
  EXPECT_LT(fd_check(f, c.fc2.w), 1e-6);

  auto g = [&] { return ifub_loss(c, x, y, false); };
  EXPECT_LT(fd_check(g, x), 1e-6);
  EXPECT_LT(fd_check(g, y), 1e-6);
}

TEST(Vclub, ZeroWeightMeanHeadGivesZero) {
  Rng rng(54);
  ParamStore store;
  GaussianQ q = GaussianQ::create(store, "q", 3, 2, rng);
  q.mu.w.raw_value().setZero();
  q.logvar.w.raw_value().setZero();  // q ignores x entirely
  Mat x = random_mat(rng, 16, 3), y = random_mat(rng, 16, 2);
  EXPECT_NEAR(vclub_estimate(q, x, y).value, 0.0, 1e-12);
}

TEST(Vclub, NllGradients) {
  Rng rng(55);
  ParamStore store;
  GaussianQ q = GaussianQ::create(store, "q", 3, 2, rng);
  Tensor x(random_mat(rng, 6, 3), true), y(random_mat(rng, 6, 2), true);
  auto f = [&] { return q.nll(x, y); };
  EXPECT_LT(fd_check(f, x), 1e-6);
  EXPECT_LT(fd_check(f, y), 1e-6);
  EXPECT_LT(fd_check(f, q.mu.w), 1e-6);
  EXPECT_LT(fd_check(f, q.logvar.w), 1e-6);
}

TEST(GaussianOracle, ClosedForm) {
  EXPECT_DOUBLE_EQ(gaussian_mi_oracle(0.0), 0.0);
  EXPECT_NEAR(gaussian_mi_oracle(0.9), 0.83037, 1e-5);
  EXPECT_NEAR(gaussian_mi_oracle(0.5), 0.14384, 1e-5);
  EXPECT_NEAR(gaussian_mi_oracle(-0.9), 0.83037, 1e-5);
  EXPECT_THROW(gaussian_mi_oracle(1.0), Error);
  EXPECT_THROW(gaussian_mi_oracle(-1.2), Error);
}

TEST(GaussianBench, SmokeOrderingAtReducedScale) {
  // fast variant of acceptance criterion 1 (fewer steps, looser gates)
  GaussianBenchRow r0 = run_gaussian_bench(0.0, 256, 400, 17, 64, 3e-3);
  GaussianBenchRow r5 = run_gaussian_bench(0.5, 256, 400, 17, 64, 3e-3);
  GaussianBenchRow r9 = run_gaussian_bench(0.9, 256, 400, 17, 64, 3e-3);
  EXPECT_LE(std::abs(r0.ifub), 0.08);
  EXPECT_LE(std::abs(r0.vclub), 0.08);
  EXPECT_LT(r5.ifub, r9.ifub);
  EXPECT_LT(r5.vclub, r9.vclub);
  EXPECT_NEAR(r5.analytic, 0.14384, 1e-5);
}

TEST(Alternation, PlantedCorrelationIsMinimized) {
  // shared latent drives three "embeddings"; linear adapters trained against
  // the IFUB term must cut the measured MI by at least half
  Rng rng(56);
  const int dim = 6, latent = 4;
  Mat a = random_mat(rng, dim, latent), b = random_mat(rng, dim, latent),
      c = random_mat(rng, dim, latent);
  auto draw = [&](long n, Rng& r) {
    Mat h(n, latent), e1 = random_mat(r, n, dim), e2 = random_mat(r, n, dim),
        e3 = random_mat(r, n, dim);
    for (long i = 0; i < n; ++i)
      for (int j = 0; j < latent; ++j) h(i, j) = r.gaussian();
    std::array<Mat, 3> out;
    out[0] = h * a.transpose() + 0.3 * e1;
    out[1] = h * b.transpose() + 0.3 * e2;
    out[2] = h * c.transpose() + 0.3 * e3;
    return out;
  };

  ParamStore adapters;
  Rng arng(57);
  Linear ad_c = Linear::create(adapters, "ad.c", dim, dim, arng, 0.01);
  Linear ad_p = Linear::create(adapters, "ad.p", dim, dim, arng, 0.01);
  Linear ad_r = Linear::create(adapters, "ad.r", dim, dim, arng, 0.01);
  for (auto* l : {&ad_c, &ad_p, &ad_r})
    l->w.raw_value() += Mat::Identity(dim, dim);  // near-identity start

  Rng crng(58);
  MiCritics critics = MiCritics::create(dim, dim, dim, 32, 3e-3, false, crng);
  Adam adapter_opt;

  Rng data(59);
  auto apply_mat = [&](const Mat& m, const Linear& l) {
    Mat out = m * l.w.value().transpose();
    out.rowwise() += l.b.value().row(0);
    return out;
  };

  // measure start: critics warm up on the current adapters
  auto measure = [&](int warm_steps) {
    for (int s = 0; s < warm_steps; ++s) {
      auto e = draw(64, data);
      critics.update(apply_mat(e[0], ad_c), apply_mat(e[1], ad_p), apply_mat(e[2], ad_r));
    }
    double total = 0;
    for (int rep = 0; rep < 8; ++rep) {
      auto e = draw(128, data);
      auto est = critics.estimates(apply_mat(e[0], ad_c), apply_mat(e[1], ad_p),
                                   apply_mat(e[2], ad_r));
      total += est[0] + est[1] + est[2];
    }
    return total / 8.0;
  };

  const double start = measure(300);
  ASSERT_GT(start, 0.3);  // the planted correlation must be visible

  const auto critic_fp_builder = [&] { return critics.store.fingerprint(); };
  for (int step = 0; step < 500; ++step) {
    auto e = draw(64, data);
    // phase (a): critics ascend on detached embeddings
    const auto adapter_fp = adapters.fingerprint();
    critics.update(apply_mat(e[0], ad_c), apply_mat(e[1], ad_p), apply_mat(e[2], ad_r));
    EXPECT_EQ(adapters.fingerprint(), adapter_fp);  // phase isolation

    // phase (b): adapters descend on the live IFUB term
    adapters.zero_grad();
    Tensor zc = ad_c(constant(e[0])), zp = ad_p(constant(e[1])), zr = ad_r(constant(e[2]));
    const auto critic_fp = critic_fp_builder();
    Tensor mi = critics.mi_loss(zc, zp, zr);
    mi.backward();
    adapter_opt.step(adapters, 2e-3);
    EXPECT_EQ(critic_fp_builder(), critic_fp);  // critics untouched in (b)
  }
  const double end = measure(100);
  EXPECT_LE(end, 0.5 * start) << "start " << start << " end " << end;
}

TEST(IfubLiteral, RequiresEqualDims) {
  Rng rng(60);
  ParamStore store;
  Critic c = Critic::create(store, "c", 3, 2, 8, rng);
  Tensor x(random_mat(rng, 4, 3)), y(random_mat(rng, 4, 2));
  EXPECT_THROW(ifub_loss(c, x, y, true), Error);

  Critic sq = Critic::create(store, "sq", 3, 3, 8, rng);
  Tensor y2(random_mat(rng, 4, 3));
  EXPECT_NO_THROW(ifub_loss(sq, x, y2, true));
  // constant critic cancels in the literal form as well
  ParamStore store2;
  Critic cc = constant_critic(store2, 3, 3, 0.9, rng);
  EXPECT_NEAR(ifub_loss(cc, x, y2, true).item(), 0.0, 1e-13);
}
