// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>

#include "eadvc/config.hpp"
#include "eadvc/nn/layers.hpp"

namespace eadvc::miest {

// Fully connected critic over a concatenated pair; one hidden tanh layer (a
// strictly linear critic cancels identically in the upper-bound form).
struct Critic {
  nn::Linear fc1, fc2;
  int dx = 0, dy = 0;
  static Critic create(nn::ParamStore& store, const std::string& prefix, int dx, int dy,
                       int hidden, Rng& rng);
  // F(i, j) = f(x_i, y_j) for all pairs: N x N
  nn::Tensor score_pairs(const nn::Tensor& x, const nn::Tensor& y) const;
};

// (1/N) sum_i log[ exp f(x_i,y_i) / ((1/N) sum_j exp f(x_i,y_j)) ]
// The critic is trained by maximizing this (diagonal included in j).
nn::Tensor critic_loss(const Critic& f, const nn::Tensor& x, const nn::Tensor& y);

// I_hat = (1/N) sum_i [ f(x_i,y_i) - (1/N) sum_j f(x_i, m_j) ] with the
// marginal term m = y by default; `literal` reproduces the printed m = x form
// (requires dx == dy).
nn::Tensor ifub_loss(const Critic& f, const nn::Tensor& x, const nn::Tensor& y, bool literal);

struct MIEstimate {
  double value = 0.0;  // nats
  std::string pair_id;
  long n = 0;
};
MIEstimate ifub_estimate(const Critic& f, const nn::Mat& x, const nn::Mat& y,
                         bool literal = false, const std::string& pair_id = "");

// Gaussian variational net q(y|x) = N(mu(x), diag sigma^2(x)) for vCLUB.
struct GaussianQ {
  nn::Linear mu, logvar;
  int dx = 0, dy = 0;
  static GaussianQ create(nn::ParamStore& store, const std::string& prefix, int dx, int dy,
                          Rng& rng);
  // mean negative log-likelihood of joint samples (constant terms dropped)
  nn::Tensor nll(const nn::Tensor& x, const nn::Tensor& y) const;
};
MIEstimate vclub_estimate(const GaussianQ& q, const nn::Mat& x, const nn::Mat& y,
                          const std::string& pair_id = "");

// analytic MI of a bivariate Gaussian with correlation rho: -ln(1-rho^2)/2
double gaussian_mi_oracle(double rho);

// Critic bank for the three embedding pairs, with its own store/optimizer —
// parameters are disjoint from every encoder/adapter by construction.
struct MiCritics {
  nn::ParamStore store;
  nn::Adam opt;
  Critic cp, pr, cr;
  double lr = 1e-4;
  bool literal = false;

  static MiCritics create(int dc, int dp, int dr, int hidden, double lr, bool literal, Rng& rng);
  // phase (a): one ascent step per critic on detached samples; returns L values
  std::array<double, 3> update(const nn::Mat& zc, const nn::Mat& zp, const nn::Mat& zr);
  // phase (b) term: I_cp + I_pr + I_cr on live tensors (critics held fixed by
  // the optimizer split; gradients flow to the embeddings only)
  nn::Tensor mi_loss(const nn::Tensor& zc, const nn::Tensor& zp, const nn::Tensor& zr) const;
  std::array<double, 3> estimates(const nn::Mat& zc, const nn::Mat& zp, const nn::Mat& zr) const;
};

// Gaussian benchmark row for the mi-bench CLI and acceptance criterion 1.
struct GaussianBenchRow {
  double rho = 0.0, analytic = 0.0, ifub = 0.0, vclub = 0.0;
};
GaussianBenchRow run_gaussian_bench(double rho, long eval_samples, long critic_steps, long seed,
                                    int critic_hidden, double critic_lr);

}  // namespace eadvc::miest
