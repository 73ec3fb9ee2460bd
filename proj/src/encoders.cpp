// SPDX-License-Identifier: Apache-2.0
#include "eadvc/encoders.hpp"

#include "eadvc/nn/ops.hpp"

namespace eadvc::encoders {

using namespace eadvc::nn;

ModelDims ModelDims::from_config(const Config& cfg) {
  ModelDims d;
  d.n_mels = static_cast<int>(cfg.get_i("audio.n_mels"));
  d.d_content = static_cast<int>(cfg.get_i("model.d_content"));
  d.d_pitch = static_cast<int>(cfg.get_i("model.d_pitch"));
  d.d_rhythm = static_cast<int>(cfg.get_i("model.d_rhythm"));
  d.d_speaker = static_cast<int>(cfg.get_i("model.d_speaker"));
  d.d_hidden = static_cast<int>(cfg.get_i("model.d_hidden"));
  d.asr_hidden = static_cast<int>(cfg.get_i("model.asr_hidden"));
  d.d_bnf = static_cast<int>(cfg.get_i("model.d_bnf"));
  d.vocab = static_cast<int>(cfg.get_i("model.asr_vocab"));
  d.adapter_hidden = static_cast<int>(cfg.get_i("model.adapter_hidden"));
  d.d_att = static_cast<int>(cfg.get_i("model.d_att"));
  d.d_value = static_cast<int>(cfg.get_i("model.d_value"));
  d.dec_hidden = static_cast<int>(cfg.get_i("model.dec_hidden"));
  d.fusion = cfg.get_s("model.fusion");
  require(d.fusion == "sat" || d.fusion == "concat", Err::InvalidConfig,
          "model.fusion must be sat or concat");
  return d;
}

FeatureEncoder::FeatureEncoder(ParamStore& store, const std::string& prefix, int in, int hidden,
                               int out, Rng& rng)
    : in_(in), out_(out) {
  c1_ = Conv1d::create(store, prefix + ".c1", in, hidden, 5, rng);
  c2_ = Conv1d::create(store, prefix + ".c2", hidden, hidden, 5, rng);
  c3_ = Conv1d::create(store, prefix + ".c3", hidden, out, 1, rng);
}

Tensor FeatureEncoder::encode(const Tensor& mel) const {
  require(mel.cols() == in_, Err::ShapeMismatch, "encoder input width mismatch");
  return c3_(relu(c2_(relu(c1_(mel)))));
}

RankLayer RankLayer::create(ParamStore& store, const std::string& prefix, int dim, Rng& rng) {
  RankLayer r;
  r.fc = Linear::create(store, prefix + ".fc", dim, 1, rng);
  return r;
}

Tensor RankLayer::score(const Tensor& z) const { return fc(mean_rows(z)); }

Adapter Adapter::create(ParamStore& store, const std::string& prefix, int dim, int hidden,
                        Rng& rng) {
  Adapter a;
  a.down = Linear::create(store, prefix + ".down", dim, hidden, rng, 0.05);
  a.up = Linear::create(store, prefix + ".up", hidden, dim, rng, 0.05);
  return a;
}

Tensor Adapter::apply(const Tensor& z) const {
  require(z.cols() == down.w.cols(), Err::ShapeMismatch, "adapter width mismatch");
  return add(z, up(tanh_op(down(z))));
}

SpeakerEncoder::SpeakerEncoder(ParamStore& store, const std::string& prefix, int in, int hidden,
                               int out, Rng& rng) {
  c1_ = Conv1d::create(store, prefix + ".c1", in, hidden, 5, rng);
  c2_ = Conv1d::create(store, prefix + ".c2", hidden, hidden, 5, rng);
  proj_ = Linear::create(store, prefix + ".proj", hidden, out, rng);
}

Tensor SpeakerEncoder::encode(const Tensor& mel) const {
  Tensor h = relu(c2_(relu(c1_(mel))));
  return l2_normalize_rows(proj_(mean_rows(h)));
}

TextEncoder::TextEncoder(ParamStore& store, const std::string& prefix, int vocab, int dim,
                         Rng& rng) {
  table_ = store.add(prefix + ".table", scaled_init(rng, vocab, dim, 0.5));
  mix_ = Conv1d::create(store, prefix + ".mix", dim, dim, 3, rng);
  out_ = Linear::create(store, prefix + ".out", dim, dim, rng);
}

Tensor TextEncoder::encode(const std::vector<int>& phonemes,
                           const std::vector<int>& durations) const {
  require(!phonemes.empty(), Err::ShapeMismatch, "empty phoneme sequence");
  require(phonemes.size() == durations.size(), Err::ShapeMismatch,
          "phoneme/duration length mismatch");
  for (int d : durations) require(d > 0, Err::NonPositiveDuration, "duration must be positive");
  Tensor h = out_(relu(mix_(embedding(table_, phonemes))));
  return repeat_rows_by(h, durations);
}

AsrEncoder::AsrEncoder(ParamStore& store, const std::string& prefix, int in, int hidden, int bnf,
                       int vocab, Rng& rng)
    : vocab_(vocab) {
  c1_ = Conv1d::create(store, prefix + ".c1", in, hidden, 5, rng);
  c2_ = Conv1d::create(store, prefix + ".c2", hidden, hidden, 5, rng);
  c3_ = Conv1d::create(store, prefix + ".c3", hidden, bnf, 1, rng);
  head_ = Linear::create(store, prefix + ".head", bnf, vocab + 1, rng);
}

std::pair<Tensor, Tensor> AsrEncoder::encode(const Tensor& mel) const {
  require(mel.cols() == c1_.w.cols() / c1_.k, Err::ShapeMismatch, "asr input width mismatch");
  Tensor bnf = relu(c3_(relu(c2_(relu(c1_(mel))))));
  return {bnf, head_(bnf)};
}

}  // namespace eadvc::encoders
