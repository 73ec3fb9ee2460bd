// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "eadvc/objectives.hpp"
#include "testutil.hpp"

using namespace eadvc;
using namespace eadvc::nn;
using namespace eadvc::objectives;
using eadvc::testutil::fd_check;
using eadvc::testutil::random_mat;

namespace {
constexpr double kFdTol = 1e-6;
LossWeights default_weights() { return LossWeights::from_config(Config::defaults()); }
}  // namespace

TEST(RankSigmoid, ClosedForm) {
  auto s = [](double a, double b) {
    return rank_sigmoid(Tensor::scalar(a), Tensor::scalar(b)).item();
  };
  EXPECT_DOUBLE_EQ(s(1.7, 1.7), 0.5);
  EXPECT_NEAR(s(std::log(3.0), 0.0), 0.75, 1e-12);
  EXPECT_NEAR(s(-std::log(3.0), 0.0), 0.25, 1e-12);
}

TEST(RankLoss, ValuesAndMinimum) {
  EXPECT_NEAR(rank_loss(Tensor::scalar(0.5), 0.5).item(), std::log(2.0), 1e-12);
  EXPECT_NEAR(rank_loss(Tensor::scalar(0.8), 0.8).item(),
              -0.8 * std::log(0.8) - 0.2 * std::log(0.2), 1e-12);
  EXPECT_NEAR(rank_loss(Tensor::scalar(0.8), 0.8).item(), 0.50040, 1e-5);

  // grid argmin sits at the target for a sweep of gammas
  for (double gamma : {0.3, 0.5, 0.7, 0.9}) {
    double best_s = -1, best_v = 1e30;
    for (double s = 0.01; s < 1.0; s += 0.01) {
      double v = rank_loss(Tensor::scalar(s), gamma).item();
      EXPECT_GE(v + 1e-12, rank_loss(Tensor::scalar(gamma), gamma).item());
      if (v < best_v) {
        best_v = v;
        best_s = s;
      }
    }
    EXPECT_NEAR(best_s, gamma, 0.011);
  }
  EXPECT_THROW(rank_loss(Tensor::scalar(0.5), 0.0), Error);
}

TEST(RankLoss, GradientThroughSigmoid) {
  Rng rng(41);
  Tensor a(random_mat(rng, 1, 1), true), b(random_mat(rng, 1, 1), true);
  auto f = [&] { return rank_loss(rank_sigmoid(a, b), 0.7); };
  EXPECT_LT(fd_check(f, a), kFdTol);
  EXPECT_LT(fd_check(f, b), kFdTol);
}

TEST(InfoNce, ClosedFormAndEdgeCases) {
  Mat c(1, 2), aug(1, 2), negm(1, 2);
  c << 1, 0;
  aug << 1, 0;
  negm << 0, 1;
  Tensor tc(c), taug(aug), tneg(negm);
  EXPECT_DOUBLE_EQ(info_nce(tc, taug, {}, 1.0, 0.1).item(), 0.0);  // no negatives
  EXPECT_DOUBLE_EQ(info_nce(tc, taug, {tneg}, 0.0, 0.1).item(), 0.0);  // beta = 0
  const double want = -std::log(std::exp(10.0) / (std::exp(10.0) + 1.0));
  EXPECT_NEAR(info_nce(tc, taug, {tneg}, 1.0, 0.1).item(), want, 1e-12);
  EXPECT_NEAR(want, 4.54e-5, 1e-6);

  // non-negative whenever at least one negative is present
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor x(random_mat(rng, 1, 4)), y(random_mat(rng, 1, 4)), n1(random_mat(rng, 1, 4));
    EXPECT_GE(info_nce(x, y, {n1}, 0.7, 0.1).item(), 0.0);
  }
}

TEST(InfoNce, Gradients) {
  Rng rng(43);
  Tensor c(random_mat(rng, 1, 5), true);
  Tensor aug(random_mat(rng, 1, 5), true);
  Tensor n1(random_mat(rng, 1, 5), true), n2(random_mat(rng, 1, 5), true);
  auto f = [&] { return info_nce(c, aug, {n1, n2}, 0.8, 0.1); };
  EXPECT_LT(fd_check(f, c), kFdTol);
  EXPECT_LT(fd_check(f, aug), kFdTol);
  EXPECT_LT(fd_check(f, n1), kFdTol);
}

TEST(ConsistencyLosses, ValuesMaskedByConstruction) {
  Rng rng(44);
  Mat z = random_mat(rng, 6, 4);
  EXPECT_DOUBLE_EQ(content_consistency(Tensor(z), Tensor(z)).item(), 0.0);
  Mat z1 = z.array() + 1.0;
  EXPECT_DOUBLE_EQ(content_consistency(Tensor(z1), Tensor(z)).item(), 1.0);
  EXPECT_DOUBLE_EQ(bnf_consistency(Tensor(z), Tensor(Mat(z.array() + 0.5))).item(), 0.5);
  EXPECT_THROW(content_consistency(Tensor(z), Tensor(random_mat(rng, 5, 4))), Error);

  Tensor a(Mat(z.array() + 0.7), true), b(z, true);
  auto f = [&] { return reconstruction(a, b); };
  EXPECT_LT(fd_check(f, a), kFdTol);
}

TEST(AdversarialSpeaker, EntropyBoundsAndGradient) {
  Rng rng(45);
  LossWeights w = default_weights();
  ParamStore store;
  Linear clf = Linear::create(store, "adv.fc", 16, 8, rng);
  clf.w.raw_value().setZero();  // uniform output
  clf.b.raw_value().setZero();
  Tensor z(random_mat(rng, 1, 16), true);
  EXPECT_NEAR(adversarial_speaker(z, 3, clf, w).item(), std::log(8.0), 1e-12);

  // near-perfect classifier drives CE toward zero
  clf.b.raw_value()(0, 3) = 50.0;
  EXPECT_LT(adversarial_speaker(z, 3, clf, w).item(), 1e-6);

  clf.b.raw_value().setZero();
  Rng rng2(46);
  clf.w.raw_value() = random_mat(rng2, 8, 16);
  auto f = [&] { return adversarial_speaker(z, 3, clf, w); };
  EXPECT_LT(fd_check(f, z), kFdTol);
  auto g = [&] { return adversarial_speaker(z, 3, clf, w); };
  EXPECT_LT(fd_check(g, clf.w), kFdTol);

  // GRL flips the sign of the gradient reaching z relative to the classifier
  store.zero_grad();
  z.zero_grad();
  Tensor plain = cross_entropy_rows(clf(z), {3});
  plain.backward();
  Mat gz_plain = z.grad();
  z.zero_grad();
  store.zero_grad();
  adversarial_speaker(z, 3, clf, w).backward();
  EXPECT_TRUE(z.grad().isApprox(-w.grl_lambda * gz_plain, 1e-9));
}

TEST(Stage1Loss, SymmetryPointAndAdditivity) {
  Rng rng(47);
  LossWeights w = default_weights();
  Stage1Outputs out;
  const int n = 3;
  for (int i = 0; i < n; ++i) {
    out.gamma_p.push_back(0.5);
    out.gamma_r.push_back(0.5);
    Tensor p(random_mat(rng, 1, 1));
    Tensor r(random_mat(rng, 1, 1));
    Tensor c(random_mat(rng, 1, 8));
    out.p_clean.push_back(p);
    out.p_aug.push_back(p);  // identical clean/aug
    out.r_clean.push_back(r);
    out.r_aug.push_back(r);
    out.c_clean.push_back(c);
    out.c_aug.push_back(c);
  }
  auto [total, report] = stage1_loss(out, w);
  EXPECT_NEAR(report.get("L_p"), std::log(2.0), 1e-5);
  EXPECT_NEAR(report.get("L_r"), std::log(2.0), 1e-5);
  EXPECT_NEAR(report.get("L_enc"),
              report.get("L_r") + report.get("L_p") + report.get("L_infoNCE"), 1e-12);
  EXPECT_DOUBLE_EQ(total.item(), report.get("L_enc"));
}

TEST(Stage1Loss, FiniteDifferenceOnInputs) {
  Rng rng(48);
  LossWeights w = default_weights();
  Stage1Outputs out;
  Tensor probe(random_mat(rng, 1, 6), true);  // one pooled content vector
  for (int i = 0; i < 3; ++i) {
    out.gamma_p.push_back(0.3 + 0.2 * i);
    out.gamma_r.push_back(0.7 - 0.15 * i);
    out.p_clean.emplace_back(random_mat(rng, 1, 1), true);
    out.p_aug.emplace_back(random_mat(rng, 1, 1), true);
    out.r_clean.emplace_back(random_mat(rng, 1, 1), true);
    out.r_aug.emplace_back(random_mat(rng, 1, 1), true);
    out.c_clean.push_back(i == 0 ? probe : Tensor(random_mat(rng, 1, 6), true));
    out.c_aug.emplace_back(random_mat(rng, 1, 6), true);
  }
  auto f = [&] { return stage1_loss(out, w).first; };
  EXPECT_LT(fd_check(f, probe), kFdTol);
  EXPECT_LT(fd_check(f, out.p_aug[1]), kFdTol);
  EXPECT_LT(fd_check(f, out.r_clean[2]), kFdTol);
}

TEST(TotalLoss, ArithmeticAndLinearity) {
  LossWeights w = default_weights();
  auto parts = [&](double recon, double mi, double con, double adv, double bnf) {
    TotalLossParts p{Tensor::scalar(recon), Tensor::scalar(mi), Tensor::scalar(con),
                     Tensor::scalar(adv), Tensor::scalar(bnf)};
    return p;
  };
  LossWeights all_zero = w;
  all_zero.alpha1 = all_zero.alpha2 = all_zero.alpha3 = all_zero.alpha4 = 0.0;
  auto [t0, r0] = total_loss(parts(0.37, 5, 5, 5, 5), all_zero);
  EXPECT_DOUBLE_EQ(t0.item(), 0.37);

  LossWeights only_mi = all_zero;
  only_mi.alpha1 = 1.0;
  auto [t1, r1] = total_loss(parts(0.7, 0.3, 0, 0, 0), only_mi);
  EXPECT_DOUBLE_EQ(t1.item(), 1.0);
  r1.check_total(only_mi);

  // linear in each alpha, checked at two points
  for (int which = 1; which <= 4; ++which) {
    auto at = [&](double a) {
      LossWeights lw = all_zero;
      (which == 1   ? lw.alpha1
       : which == 2 ? lw.alpha2
       : which == 3 ? lw.alpha3
                    : lw.alpha4) = a;
      return total_loss(parts(0.2, 0.5, 0.6, 0.7, 0.8), lw).first.item();
    };
    const double base = at(0.0);
    EXPECT_NEAR(at(2.0) - base, 2.0 * (at(1.0) - base), 1e-12);
  }
}
