// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "eadvc/config.hpp"
#include "eadvc/nn/layers.hpp"
#include "eadvc/nn/ops.hpp"

namespace eadvc::objectives {

struct LossWeights {
  double alpha1 = 0.01;  // L_MI
  double alpha2 = 1.0;   // L_con
  double alpha3 = 0.1;   // L_adv
  double alpha4 = 1.0;   // L_bnf
  double beta = 1.0;     // InfoNCE decay coefficient (scheduled by the trainer)
  double temperature = 0.1;
  double grl_lambda = 1.0;
  double eps_clamp = 1e-7;
  bool adv_flip = false;
  bool infonce_normalize = true;
  static LossWeights from_config(const Config& cfg);
};

class LossReport {
 public:
  void set(const std::string& name, double v);
  double get(const std::string& name) const;
  bool has(const std::string& name) const { return values_.count(name) != 0; }
  const std::map<std::string, double>& values() const { return values_; }
  // L_total == L_recon + a1*L_MI + a2*L_con + a3*L_adv + a4*L_bnf within 1e-6
  void check_total(const LossWeights& w) const;

 private:
  std::map<std::string, double> values_;
};

// S = sigmoid(first - second); the trainer passes (score_aug, score_clean) so
// the learned score increases with augmentation intensity.
nn::Tensor rank_sigmoid(const nn::Tensor& score_a, const nn::Tensor& score_b);

// binary cross-entropy against the intensity target; minimized at S == gamma
nn::Tensor rank_loss(const nn::Tensor& s, double gamma, double eps_clamp = 1e-7);

// -beta * log( sim(c, c_aug) / (sim(c, c_aug) + sum_k sim(c, neg_k)) ),
// sim(a, b) = exp(a . b / t). Exactly 0 with no negatives.
nn::Tensor info_nce(const nn::Tensor& c, const nn::Tensor& c_aug,
                    const std::vector<nn::Tensor>& negatives, double beta, double t);

nn::Tensor content_consistency(const nn::Tensor& z_c, const nn::Tensor& z_hat_c);
nn::Tensor bnf_consistency(const nn::Tensor& h_bnf, const nn::Tensor& h_hat_bnf);
nn::Tensor reconstruction(const nn::Tensor& mel_hat, const nn::Tensor& mel);

using nn::grl;  // identity forward, gradient scaled by -lambda

// Speaker classifier cross-entropy on gradient-reversed content embeddings.
// `adv_flip` negates the term reaching the encoder side (ablation switch).
nn::Tensor adversarial_speaker(const nn::Tensor& z_c_pooled, int speaker_id,
                               const nn::Linear& classifier, const LossWeights& w);

// Per-item stage-1 quantities, already encoded by the trainer.
struct Stage1Outputs {
  std::vector<double> gamma_p, gamma_r;
  std::vector<nn::Tensor> p_clean, p_aug;  // pitch scores, 1x1
  std::vector<nn::Tensor> r_clean, r_aug;  // rhythm scores, 1x1
  std::vector<nn::Tensor> c_clean, c_aug;  // pooled content, 1xD
};

// L_enc = L_r + L_p + L_infoNCE, averaged over the batch. Negatives for each
// item are the other items' pooled content vectors.
std::pair<nn::Tensor, LossReport> stage1_loss(const Stage1Outputs& out, const LossWeights& w);

struct TotalLossParts {
  nn::Tensor recon, mi, con, adv, bnf;
};
std::pair<nn::Tensor, LossReport> total_loss(const TotalLossParts& parts, const LossWeights& w);

}  // namespace eadvc::objectives
