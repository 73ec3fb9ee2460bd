// SPDX-License-Identifier: Apache-2.0
#include "eadvc/synthesis.hpp"

#include <cmath>

#include "eadvc/nn/ops.hpp"

namespace eadvc::synthesis {

using namespace eadvc::nn;

SatBlock SatBlock::create(ParamStore& store, const std::string& prefix, int d_con, int d_spk,
                          int d_att, int d_value, Rng& rng) {
  SatBlock s;
  s.wq = store.add(prefix + ".wq", he_init(rng, d_att, d_con));
  s.wk = store.add(prefix + ".wk", he_init(rng, d_att, d_spk));
  s.wv = store.add(prefix + ".wv", he_init(rng, d_value, d_spk));
  return s;
}

Tensor SatBlock::attention(const Tensor& z_con, const Tensor& f_spk) const {
  require(z_con.cols() == wq.cols(), Err::ShapeMismatch, "sat: query width mismatch");
  require(f_spk.cols() == wk.cols(), Err::ShapeMismatch, "sat: key width mismatch");
  Tensor q = matmul(z_con, transpose(wq));  // T x d_att
  Tensor k = matmul(f_spk, transpose(wk));  // K x d_att
  return row_softmax(matmul(q, transpose(k)));
}

Tensor SatBlock::fuse(const Tensor& z_con, const Tensor& f_spk) const {
  Tensor a = attention(z_con, f_spk);       // T x K
  Tensor v = matmul(f_spk, transpose(wv));  // K x d_value
  return concat_cols({matmul(a, v), z_con});
}

Tensor fuse_concat(const Tensor& z_con, const Tensor& f_spk) {
  require(f_spk.rows() == 1, Err::ShapeMismatch, "concat fusion expects one speaker vector");
  return concat_cols({broadcast_row(f_spk, z_con.rows()), z_con});
}

Decoder::Decoder(ParamStore& store, const std::string& prefix, int in, int hidden, int n_mels,
                 Rng& rng)
    : in_(in) {
  l1_ = Linear::create(store, prefix + ".l1", in, hidden, rng);
  l2_ = Linear::create(store, prefix + ".l2", hidden, hidden, rng);
  l3_ = Linear::create(store, prefix + ".l3", hidden, n_mels, rng);
}

Tensor Decoder::decode(const Tensor& z) const {
  require(z.cols() == in_, Err::ShapeMismatch, "decoder input width mismatch");
  return l3_(relu(l2_(relu(l1_(z)))));
}

dsp::Waveform griffin_lim(const Mat& log_mel, const dsp::AudioConfig& cfg, int iterations,
                          long seed, std::vector<double>* error_trace) {
  const long t_len = log_mel.rows();
  const long n_bins = cfg.n_fft / 2 + 1;
  require(log_mel.cols() == cfg.n_mels, Err::ShapeMismatch, "griffin_lim: mel width mismatch");

  // least-squares lift from mel magnitudes back to the linear spectrum
  Mat fb = dsp::mel_filterbank(cfg);
  Mat gram = fb * fb.transpose();
  gram.diagonal().array() += 1e-6;
  Mat lift = gram.llt().solve(fb);  // n_mels x n_bins
  Mat mel_mag = log_mel.array().exp();
  Mat target = (mel_mag * lift).cwiseMax(0.0);  // T x n_bins

  const long n_out = t_len * cfg.hop_length;
  Rng rng(static_cast<std::uint64_t>(seed));
  dsp::CMat frames(t_len, n_bins);
  for (long t = 0; t < t_len; ++t)
    for (long k = 0; k < n_bins; ++k)
      frames(t, k) = std::polar(target(t, k), rng.uniform(0.0, 2.0 * M_PI));

  std::vector<double> x;
  for (int it = 0; it < iterations; ++it) {
    x = dsp::istft(frames, cfg, n_out);
    dsp::CMat re = dsp::stft(x, cfg);
    if (error_trace) {
      double err = 0.0;
      for (long t = 0; t < t_len; ++t)
        for (long k = 0; k < n_bins; ++k) err += std::abs(std::abs(re(t, k)) - target(t, k));
      error_trace->push_back(err / static_cast<double>(t_len * n_bins));
    }
    for (long t = 0; t < t_len; ++t)
      for (long k = 0; k < n_bins; ++k)
        frames(t, k) = std::polar(target(t, k), std::arg(re(t, k)));
  }
  dsp::Waveform w;
  w.sample_rate = cfg.sample_rate;
  w.samples = dsp::istft(frames, cfg, n_out);
  return w;
}

}  // namespace eadvc::synthesis
