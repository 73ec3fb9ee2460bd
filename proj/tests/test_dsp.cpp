// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "eadvc/corpus.hpp"
#include "eadvc/dsp.hpp"
#include "testutil.hpp"

using namespace eadvc;
using namespace eadvc::dsp;

namespace {

Waveform sine(double freq, double seconds = 1.0, double amp = 0.3) {
  Waveform w;
  w.sample_rate = 16000;
  const long n = static_cast<long>(seconds * 16000);
  w.samples.resize(n);
  for (long i = 0; i < n; ++i) w.samples[i] = amp * std::sin(2.0 * M_PI * freq * i / 16000.0);
  return w;
}

Waveform white_noise(double seconds = 1.0, long seed = 5) {
  Rng rng(seed);
  Waveform w;
  w.sample_rate = 16000;
  w.samples.resize(static_cast<long>(seconds * 16000));
  for (auto& s : w.samples) s = 0.2 * rng.gaussian();
  return w;
}

Waveform toy_utterance(int speaker = 0, int utt = 0) {
  corpus::ToyCorpusSpec spec;
  spec.n_speakers = 12;
  return corpus::synth_utterance(corpus::speaker_attrs(spec, speaker),
                                 corpus::utt_params(spec, speaker, utt));
}

double mel_l1_per_entry(const nn::Mat& a, const nn::Mat& b) {
  const long t = std::min(a.rows(), b.rows());
  return (a.topRows(t) - b.topRows(t)).cwiseAbs().sum() /
         static_cast<double>(t * a.cols());
}

// test-side oracle: raw-magnitude spectral centroid (no cepstral step)
double spectral_centroid(const Waveform& w, const AudioConfig& cfg) {
  nn::Mat mag = magnitude(stft(w.samples, cfg));
  double num = 0.0, den = 0.0;
  for (long t = 0; t < mag.rows(); ++t) {
    if (mag.row(t).sum() < 1.0) continue;  // skip near-silent frames
    for (long k = 0; k < mag.cols(); ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate / cfg.n_fft;
      num += f * mag(t, k);
      den += mag(t, k);
    }
  }
  return den > 0 ? num / den : 0.0;
}

const AudioConfig kCfg;
const AugConfig kAug;

}  // namespace

TEST(Mel, SilenceHitsLogFloor) {
  Waveform w;
  w.samples.assign(16000, 0.0);
  MelSpectrogram mel = compute_mel(w, kCfg);
  const double floor_val = std::log(1e-5);
  EXPECT_EQ(mel.t(), 80);  // 1 s / 12.5 ms
  for (long t = 0; t < mel.t(); ++t)
    for (long m = 0; m < mel.frames.cols(); ++m) EXPECT_DOUBLE_EQ(mel.frames(t, m), floor_val);
}

TEST(Mel, DeterministicAndShaped) {
  Waveform w = toy_utterance();
  MelSpectrogram a = compute_mel(w, kCfg), b = compute_mel(w, kCfg);
  EXPECT_TRUE((a.frames.array() == b.frames.array()).all());
  EXPECT_EQ(a.frames.cols(), 80);
  EXPECT_EQ(a.t(), (w.size() + kCfg.hop_length - 1) / kCfg.hop_length);

  Waveform tiny;
  tiny.samples.assign(100, 0.0);
  EXPECT_THROW(compute_mel(tiny, kCfg), Error);
}

TEST(F0, PureSineTracksFrequency) {
  PitchContour pc = extract_f0(sine(220.0), kCfg);
  EXPECT_NEAR(pc.median_voiced(), 220.0, 3.0);
  EXPECT_GT(pc.voiced_fraction(), 0.8);
}

TEST(F0, NoiseAndSilence) {
  EXPECT_LT(extract_f0(white_noise(), kCfg).voiced_fraction(), 0.2);
  Waveform w;
  w.samples.assign(16000, 0.0);
  PitchContour pc = extract_f0(w, kCfg);
  EXPECT_EQ(pc.voiced_fraction(), 0.0);
  EXPECT_EQ(pc.size(), compute_mel(w, kCfg).t());  // length contract
}

TEST(GammaMaps, ClosedFormValues) {
  EXPECT_DOUBLE_EQ(gamma_to_pitch_factor(0.5, 4.0), 1.0);
  EXPECT_NEAR(gamma_to_pitch_factor(0.875, 4.0), std::pow(2.0, 3.0 / 12.0), 1e-12);
  EXPECT_NEAR(gamma_to_pitch_factor(0.875, 4.0), 1.1892, 1e-4);
  EXPECT_NEAR(gamma_to_pitch_factor(0.125, 4.0), 0.8409, 1e-4);
  EXPECT_THROW(gamma_to_pitch_factor(0.0, 4.0), Error);
  EXPECT_THROW(gamma_to_pitch_factor(1.0, 4.0), Error);
  EXPECT_DOUBLE_EQ(gamma_to_rate(0.5, 1.5), 1.0);
  // monotone increasing
  double prev = 0.0;
  for (double g = 0.05; g < 1.0; g += 0.05) {
    double f = gamma_to_pitch_factor(g, 4.0);
    EXPECT_GT(f, prev);
    prev = f;
  }
}

TEST(PitchShift, OctaveAndIdentity) {
  Waveform w = sine(220.0);
  Waveform up = pitch_shift_factor(w, 2.0);
  EXPECT_NEAR(extract_f0(up, kCfg).median_voiced(), 440.0, 440.0 * 0.05);
  // duration preserved within one hop
  EXPECT_NEAR(static_cast<double>(up.size()), static_cast<double>(w.size()), kCfg.hop_length);

  Waveform same = pitch_shift(w, 0.5, 0, kAug);
  EXPECT_NEAR(extract_f0(same, kCfg).median_voiced(), extract_f0(w, kCfg).median_voiced(),
              220.0 * 0.01);
  EXPECT_THROW(pitch_shift(w, 1.2, 0, kAug), Error);
}

TEST(PitchShift, ToyUtteranceRatio) {
  Waveform w = toy_utterance(3, 1);
  const double before = extract_f0(w, kCfg).median_voiced();
  Waveform shifted = pitch_shift(w, 0.875, 0, kAug);
  const double after = extract_f0(shifted, kCfg).median_voiced();
  EXPECT_NEAR(after / before, 1.1892, 1.1892 * 0.05);
}

TEST(TimeStretch, DurationContract) {
  Waveform w = toy_utterance(5, 2);
  Waveform same = time_stretch(w, 0.5, kAug);
  EXPECT_NEAR(static_cast<double>(same.size()), static_cast<double>(w.size()), kCfg.hop_length);

  Waveform half = time_stretch_rate(w, 2.0);
  EXPECT_NEAR(static_cast<double>(half.size()), w.size() / 2.0, kCfg.hop_length);

  Waveform slow = time_stretch(w, 0.99, kAug);
  const double ratio = static_cast<double>(slow.size()) / w.size();
  EXPECT_NEAR(ratio, 1.0 / 1.5, 0.02);

  // F0 median preserved within 5%
  const double before = extract_f0(w, kCfg).median_voiced();
  EXPECT_NEAR(extract_f0(half, kCfg).median_voiced(), before, before * 0.05);
}

TEST(FormantPerturb, IdentityWarpIsTransparent) {
  Waveform w = toy_utterance(1, 3);
  AugmentationSpec spec;
  spec.formant_warp = 1.0;
  Waveform out = formant_perturb(w, spec, kAug);
  EXPECT_EQ(out.size(), w.size());  // duration exact
  EXPECT_LT(mel_l1_per_entry(compute_mel(w, kCfg).frames, compute_mel(out, kCfg).frames), 0.05);
}

TEST(FormantPerturb, WarpMovesEnvelopeNotPitch) {
  Waveform w = toy_utterance(2, 4);
  AugmentationSpec spec;
  spec.formant_warp = 1.2;
  Waveform out = formant_perturb(w, spec, kAug);
  EXPECT_EQ(out.size(), w.size());

  const double c0 = spectral_centroid(w, kCfg);
  const double c1 = spectral_centroid(out, kCfg);
  EXPECT_NEAR(c1 / c0, 1.2, 0.12);

  const double f_before = extract_f0(w, kCfg).median_voiced();
  const double f_after = extract_f0(out, kCfg).median_voiced();
  EXPECT_NEAR(f_after, f_before, f_before * 0.05);

  spec.formant_warp = 1.6;
  EXPECT_THROW(formant_perturb(w, spec, kAug), Error);
}

TEST(Augment, IdentityChainAndDeterminism) {
  Waveform w = toy_utterance(4, 0);
  Waveform chained = time_stretch(pitch_shift(w, 0.5, 0, kAug), 0.5, kAug);
  EXPECT_LT(mel_l1_per_entry(compute_mel(w, kCfg).frames, compute_mel(chained, kCfg).frames),
            0.05);

  Waveform a = pitch_shift(w, 0.7, 9, kAug), b = pitch_shift(w, 0.7, 9, kAug);
  ASSERT_EQ(a.size(), b.size());
  for (long i = 0; i < a.size(); ++i) ASSERT_EQ(a.samples[i], b.samples[i]);
}

TEST(Augment, PitchRatioMonotoneInGamma) {
  // strict ordering of measured F0 ratios across 100 random utterances
  Rng rng(77);
  corpus::ToyCorpusSpec spec;
  int violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int speaker = rng.uniform_int(0, 11);
    const int utt = rng.uniform_int(0, 19);
    Waveform w = corpus::synth_utterance(corpus::speaker_attrs(spec, speaker),
                                         corpus::utt_params(spec, speaker, utt));
    double g1 = rng.uniform(0.15, 0.80);
    double g2 = g1 + rng.uniform(0.05, std::min(0.85 - g1, 0.4));
    const double base = extract_f0(w, kCfg).median_voiced();
    const double r1 = extract_f0(pitch_shift(w, g1, 0, kAug), kCfg).median_voiced() / base;
    const double r2 = extract_f0(pitch_shift(w, g2, 0, kAug), kCfg).median_voiced() / base;
    if (!(r1 < r2)) ++violations;
  }
  EXPECT_EQ(violations, 0);
}

TEST(StftIstft, RoundTripIsExact) {
  Waveform w = toy_utterance(0, 5);
  auto frames = stft(w.samples, kCfg);
  auto back = istft(frames, kCfg, w.size());
  double worst = 0.0;
  for (long i = 0; i < w.size(); ++i) worst = std::max(worst, std::abs(back[i] - w.samples[i]));
  EXPECT_LT(worst, 1e-8);
}
