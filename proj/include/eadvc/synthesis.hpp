// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "eadvc/dsp.hpp"
#include "eadvc/nn/layers.hpp"

namespace eadvc::synthesis {

// Speaker-attention fusion: queries from the concatenated content/pitch/
// rhythm embeddings, keys and values from one or more reference speaker
// vectors. With a single reference the attention weight is exactly 1.
struct SatBlock {
  nn::Tensor wq, wk, wv;
  static SatBlock create(nn::ParamStore& store, const std::string& prefix, int d_con, int d_spk,
                         int d_att, int d_value, Rng& rng);
  nn::Tensor attention(const nn::Tensor& z_con, const nn::Tensor& f_spk) const;  // T x K
  // returns concat(attended values, z_con): T x (d_value + d_con)
  nn::Tensor fuse(const nn::Tensor& z_con, const nn::Tensor& f_spk) const;
};

// channel concatenation baseline: concat(broadcast f_spk, z_con)
nn::Tensor fuse_concat(const nn::Tensor& z_con, const nn::Tensor& f_spk);

// Frame-wise decoder (1x1 stack): permutation covariant in time by
// construction. Temporal context reaches it through the encoders.
class Decoder {
 public:
  Decoder() = default;
  Decoder(nn::ParamStore& store, const std::string& prefix, int in, int hidden, int n_mels,
          Rng& rng);
  nn::Tensor decode(const nn::Tensor& z) const;

 private:
  nn::Linear l1_, l2_, l3_;
  int in_ = 0;
};

// Iterative phase reconstruction from a log-mel spectrogram. Returns the
// waveform and (optionally) the per-iteration magnitude error trace.
dsp::Waveform griffin_lim(const nn::Mat& log_mel, const dsp::AudioConfig& cfg, int iterations,
                          long seed, std::vector<double>* error_trace = nullptr);

}  // namespace eadvc::synthesis
