// SPDX-License-Identifier: Apache-2.0
#include "eadvc/objectives.hpp"

#include <cmath>
#include <cstdio>

namespace eadvc::objectives {

using namespace eadvc::nn;

LossWeights LossWeights::from_config(const Config& cfg) {
  LossWeights w;
  w.alpha1 = cfg.get_f("loss.alpha1");
  w.alpha2 = cfg.get_f("loss.alpha2");
  w.alpha3 = cfg.get_f("loss.alpha3");
  w.alpha4 = cfg.get_f("loss.alpha4");
  w.beta = cfg.get_f("loss.beta_start");
  w.temperature = cfg.get_f("loss.temperature");
  w.grl_lambda = cfg.get_f("loss.grl_lambda");
  w.eps_clamp = cfg.get_f("loss.eps_clamp");
  w.adv_flip = cfg.get_s("loss.adv_sign") == "flipped";
  w.infonce_normalize = cfg.get_b("loss.infonce_normalize");
  require(w.temperature > 0, Err::InvalidConfig, "temperature must be positive");
  return w;
}

void LossReport::set(const std::string& name, double v) {
  require(std::isfinite(v), Err::NanLoss, "non-finite loss component " + name);
  values_[name] = v;
}

double LossReport::get(const std::string& name) const {
  auto it = values_.find(name);
  require(it != values_.end(), Err::InvalidConfig, "missing loss component " + name);
  return it->second;
}

void LossReport::check_total(const LossWeights& w) const {
  const double expect = get("L_recon") + w.alpha1 * get("L_MI") + w.alpha2 * get("L_con") +
                        w.alpha3 * get("L_adv") + w.alpha4 * get("L_bnf");
  require(std::abs(expect - get("L_total")) <= 1e-6, Err::NanLoss,
          "loss report total does not decompose");
}

Tensor rank_sigmoid(const Tensor& score_a, const Tensor& score_b) {
  require(score_a.rows() == 1 && score_a.cols() == 1 && score_b.rows() == 1 &&
              score_b.cols() == 1,
          Err::ShapeMismatch, "rank scores must be scalars");
  return sigmoid(sub(score_a, score_b));
}

Tensor rank_loss(const Tensor& s, double gamma, double eps_clamp) {
  require(gamma > 0.0 && gamma < 1.0, Err::InvalidIntensity, "rank target outside (0,1)");
  const double v = s.item();
  if (v <= eps_clamp || v >= 1.0 - eps_clamp)
    std::fprintf(stderr, "[objectives] rank score %.3e clamped to (%g, %g)\n", v, eps_clamp,
                 1.0 - eps_clamp);
  Tensor sc = clamp(s, eps_clamp, 1.0 - eps_clamp);
  Tensor one_minus = add_scalar(scale(sc, -1.0), 1.0);
  return scale(add(scale(log_op(sc), gamma), scale(log_op(one_minus), 1.0 - gamma)), -1.0);
}

Tensor info_nce(const Tensor& c, const Tensor& c_aug, const std::vector<Tensor>& negatives,
                double beta, double t) {
  require(c.rows() == 1 && c_aug.rows() == 1, Err::ShapeMismatch,
          "info_nce expects 1xD row vectors");
  require(c.cols() == c_aug.cols(), Err::ShapeMismatch, "info_nce dim mismatch");
  if (beta == 0.0) return Tensor::scalar(0.0);
  std::vector<Tensor> rows{c_aug};
  for (const auto& n : negatives) {
    require(n.cols() == c.cols() && n.rows() == 1, Err::ShapeMismatch, "negative dim mismatch");
    rows.push_back(n);
  }
  Tensor keys = concat_rows(rows);                             // (1+K) x D
  Tensor dots = scale(matmul(c, transpose(keys)), 1.0 / t);    // 1 x (1+K)
  Tensor lse = logsumexp_rows(dots);                           // 1 x 1
  Tensor pos = slice_cols(dots, 0, 1);
  return scale(sub(lse, pos), beta);
}

Tensor content_consistency(const Tensor& z_c, const Tensor& z_hat_c) {
  return mean_abs_diff(z_c, z_hat_c);
}

Tensor bnf_consistency(const Tensor& h_bnf, const Tensor& h_hat_bnf) {
  return mean_abs_diff(h_hat_bnf, h_bnf);
}

Tensor reconstruction(const Tensor& mel_hat, const Tensor& mel) {
  return mean_abs_diff(mel_hat, mel);
}

Tensor adversarial_speaker(const Tensor& z_c_pooled, int speaker_id, const Linear& classifier,
                           const LossWeights& w) {
  require(speaker_id >= 0 && speaker_id < classifier.w.rows(), Err::ShapeMismatch,
          "speaker id out of classifier range");
  Tensor logits = classifier(grl(z_c_pooled, w.grl_lambda));
  Tensor ce = cross_entropy_rows(logits, {speaker_id});
  return w.adv_flip ? scale(ce, -1.0) : ce;
}

std::pair<Tensor, LossReport> stage1_loss(const Stage1Outputs& out, const LossWeights& w) {
  const size_t n = out.gamma_p.size();
  require(n > 0, Err::BatchTooSmall, "stage1_loss on empty batch");
  require(out.gamma_r.size() == n && out.p_clean.size() == n && out.p_aug.size() == n &&
              out.r_clean.size() == n && out.r_aug.size() == n && out.c_clean.size() == n &&
              out.c_aug.size() == n,
          Err::ShapeMismatch, "stage1 outputs not index-aligned");
  if (n < 2)
    std::fprintf(stderr, "[objectives] batch of %zu: InfoNCE has no negatives\n", n);

  Tensor lp = Tensor::scalar(0.0), lr = Tensor::scalar(0.0), lnce = Tensor::scalar(0.0);
  for (size_t i = 0; i < n; ++i) {
    lp = add(lp, rank_loss(rank_sigmoid(out.p_aug[i], out.p_clean[i]), out.gamma_p[i],
                           w.eps_clamp));
    lr = add(lr, rank_loss(rank_sigmoid(out.r_aug[i], out.r_clean[i]), out.gamma_r[i],
                           w.eps_clamp));
    std::vector<Tensor> negatives;
    for (size_t j = 0; j < n; ++j)
      if (j != i) negatives.push_back(out.c_clean[j]);
    lnce = add(lnce, info_nce(out.c_clean[i], out.c_aug[i], negatives, w.beta, w.temperature));
  }
  const double inv = 1.0 / static_cast<double>(n);
  lp = scale(lp, inv);
  lr = scale(lr, inv);
  lnce = scale(lnce, inv);
  Tensor total = add(add(lr, lp), lnce);

  LossReport report;
  report.set("L_p", lp.item());
  report.set("L_r", lr.item());
  report.set("L_infoNCE", lnce.item());
  report.set("L_enc", total.item());
  require(std::abs(report.get("L_enc") -
                   (report.get("L_r") + report.get("L_p") + report.get("L_infoNCE"))) <= 1e-9,
          Err::NanLoss, "stage1 report does not decompose");
  return {total, report};
}

std::pair<Tensor, LossReport> total_loss(const TotalLossParts& parts, const LossWeights& w) {
  Tensor total = parts.recon;
  total = add(total, scale(parts.mi, w.alpha1));
  total = add(total, scale(parts.con, w.alpha2));
  total = add(total, scale(parts.adv, w.alpha3));
  total = add(total, scale(parts.bnf, w.alpha4));

  LossReport report;
  report.set("L_recon", parts.recon.item());
  report.set("L_MI", parts.mi.item());
  report.set("L_con", parts.con.item());
  report.set("L_adv", parts.adv.item());
  report.set("L_bnf", parts.bnf.item());
  report.set("L_total", total.item());
  report.check_total(w);
  return {total, report};
}

}  // namespace eadvc::objectives
