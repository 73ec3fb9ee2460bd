// SPDX-License-Identifier: Apache-2.0
#include "eadvc/nn/ctc.hpp"

#include <cmath>
#include <limits>

#include "eadvc/common.hpp"

namespace eadvc::nn {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double lse2(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}
double lse3(double a, double b, double c) { return lse2(lse2(a, b), c); }
}  // namespace

Tensor ctc_loss(const Tensor& logits, const std::vector<int>& labels, int blank) {
  const long t_len = logits.rows();
  const long vocab = logits.cols();
  require(blank >= 0 && blank < vocab, Err::ShapeMismatch, "ctc: blank out of range");
  for (int l : labels)
    require(l >= 0 && l < vocab && l != blank, Err::ShapeMismatch, "ctc: label out of range");
  const long L = static_cast<long>(labels.size());
  const long S = 2 * L + 1;

  // log-softmax per frame
  Mat lp(t_len, vocab);
  for (long t = 0; t < t_len; ++t) {
    double m = logits.value().row(t).maxCoeff();
    double lse = m + std::log((logits.value().row(t).array() - m).exp().sum());
    lp.row(t) = logits.value().row(t).array() - lse;
  }

  auto lab = [&](long s) -> int { return (s % 2 == 0) ? blank : labels[(s - 1) / 2]; };

  Mat alpha = Mat::Constant(t_len, S, kNegInf);
  alpha(0, 0) = lp(0, blank);
  if (S > 1) alpha(0, 1) = lp(0, lab(1));
  for (long t = 1; t < t_len; ++t) {
    for (long s = 0; s < S; ++s) {
      double best = alpha(t - 1, s);
      if (s >= 1) best = lse2(best, alpha(t - 1, s - 1));
      if (s >= 2 && lab(s) != blank && lab(s) != lab(s - 2))
        best = lse2(best, alpha(t - 1, s - 2));
      alpha(t, s) = (best == kNegInf) ? kNegInf : best + lp(t, lab(s));
    }
  }
  double log_p = (S > 1) ? lse2(alpha(t_len - 1, S - 1), alpha(t_len - 1, S - 2))
                         : alpha(t_len - 1, S - 1);
  require(std::isfinite(log_p), Err::ShapeMismatch,
          "ctc: no feasible alignment (sequence too short for labels)");

  Mat beta = Mat::Constant(t_len, S, kNegInf);
  beta(t_len - 1, S - 1) = 0.0;
  if (S > 1) beta(t_len - 1, S - 2) = 0.0;
  for (long t = t_len - 2; t >= 0; --t) {
    for (long s = 0; s < S; ++s) {
      double stay = beta(t + 1, s) + lp(t + 1, lab(s));
      double step = (s + 1 < S) ? beta(t + 1, s + 1) + lp(t + 1, lab(s + 1)) : kNegInf;
      double skip = (s + 2 < S && lab(s + 2) != blank && lab(s + 2) != lab(s))
                        ? beta(t + 1, s + 2) + lp(t + 1, lab(s + 2))
                        : kNegInf;
      beta(t, s) = lse3(stay, step, skip);
    }
  }

  // dL/dlogit = softmax - state posterior mass per symbol
  Mat grad(t_len, vocab);
  for (long t = 0; t < t_len; ++t) {
    for (long k = 0; k < vocab; ++k) grad(t, k) = std::exp(lp(t, k));
    for (long s = 0; s < S; ++s) {
      double g = alpha(t, s) + beta(t, s) - log_p;
      if (g > -700.0) grad(t, lab(s)) -= std::exp(g);
    }
  }

  Mat v(1, 1);
  v(0, 0) = -log_p;
  auto pl = logits.node();
  return make_op(std::move(v), {logits}, [pl, grad](detail::Node& n) {
    detail::accumulate(pl, Mat(grad * n.grad(0, 0)));
  });
}

std::vector<int> ctc_greedy_decode(const Mat& logits, int blank) {
  std::vector<int> out;
  int prev = -1;
  for (long t = 0; t < logits.rows(); ++t) {
    long k;
    logits.row(t).maxCoeff(&k);
    int ki = static_cast<int>(k);
    if (ki != prev && ki != blank) out.push_back(ki);
    prev = ki;
  }
  return out;
}

}  // namespace eadvc::nn
