// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "eadvc/config.hpp"
#include "eadvc/nn/ctc.hpp"
#include "eadvc/nn/layers.hpp"

namespace eadvc::encoders {

struct ModelDims {
  int n_mels = 80;
  int d_content = 64;
  int d_pitch = 32;
  int d_rhythm = 32;
  int d_speaker = 32;
  int d_hidden = 64;
  int asr_hidden = 96;
  int d_bnf = 64;
  int vocab = 24;
  int adapter_hidden = 16;
  int d_att = 32;
  int d_value = 32;
  int dec_hidden = 256;
  std::string fusion = "sat";
  static ModelDims from_config(const Config& cfg);
  int d_concat() const { return d_content + d_pitch + d_rhythm; }
};

// Shared topology for the content/pitch/rhythm encoders: two wide 1-D convs
// for temporal context, then a 1x1 projection. Length-preserving.
class FeatureEncoder {
 public:
  FeatureEncoder() = default;
  FeatureEncoder(nn::ParamStore& store, const std::string& prefix, int in, int hidden, int out,
                 Rng& rng);
  nn::Tensor encode(const nn::Tensor& mel) const;
  int in_dim() const { return in_; }
  int out_dim() const { return out_; }

 private:
  nn::Conv1d c1_, c2_, c3_;
  int in_ = 0, out_ = 0;
};

// Scalar intensity score: temporal mean followed by one linear map.
struct RankLayer {
  nn::Linear fc;
  static RankLayer create(nn::ParamStore& store, const std::string& prefix, int dim, Rng& rng);
  nn::Tensor score(const nn::Tensor& z) const;  // T x D -> 1 x 1
};

// Residual bottleneck adapter appended to a frozen encoder. Near-identity at
// init; parameter count is a small fraction of any host encoder.
struct Adapter {
  nn::Linear down, up;
  static Adapter create(nn::ParamStore& store, const std::string& prefix, int dim, int hidden,
                        Rng& rng);
  nn::Tensor apply(const nn::Tensor& z) const;
};

class SpeakerEncoder {
 public:
  SpeakerEncoder() = default;
  SpeakerEncoder(nn::ParamStore& store, const std::string& prefix, int in, int hidden, int out,
                 Rng& rng);
  nn::Tensor encode(const nn::Tensor& mel) const;  // 1 x d_speaker, unit norm

 private:
  nn::Conv1d c1_, c2_;
  nn::Linear proj_;
};

class TextEncoder {
 public:
  TextEncoder() = default;
  TextEncoder(nn::ParamStore& store, const std::string& prefix, int vocab, int dim, Rng& rng);
  // Per-phoneme embeddings mixed over neighbors, then repeated to frame rate
  // by ground-truth durations (length regulation).
  nn::Tensor encode(const std::vector<int>& phonemes, const std::vector<int>& durations) const;

 private:
  nn::Tensor table_;
  nn::Conv1d mix_;
  nn::Linear out_;
};

class AsrEncoder {
 public:
  AsrEncoder() = default;
  AsrEncoder(nn::ParamStore& store, const std::string& prefix, int in, int hidden, int bnf,
             int vocab, Rng& rng);
  // (bottleneck features T x d_bnf, logits T x (vocab+1)); blank is last
  std::pair<nn::Tensor, nn::Tensor> encode(const nn::Tensor& mel) const;
  nn::Tensor bnf(const nn::Tensor& mel) const { return encode(mel).first; }
  int blank() const { return vocab_; }

 private:
  nn::Conv1d c1_, c2_, c3_;
  nn::Linear head_;
  int vocab_ = 0;
};

}  // namespace eadvc::encoders
