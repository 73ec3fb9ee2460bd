// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <vector>

#include "eadvc/config.hpp"
#include "eadvc/nn/tensor.hpp"

namespace eadvc::dsp {

struct AudioConfig {
  int sample_rate = 16000;
  int n_fft = 1024;
  int win_length = 800;  // 50 ms
  int hop_length = 200;  // 12.5 ms
  int n_mels = 80;
  double fmin = 40.0;
  double fmax = 7600.0;
  double log_floor = 1e-5;
  static AudioConfig from_config(const Config& cfg);
};

struct AugConfig {
  double max_semitones = 4.0;
  double max_rate = 1.5;
  double gamma_lo = 0.1;
  double gamma_hi = 0.9;
  double warp_lo = 0.8;
  double warp_hi = 1.25;
  static AugConfig from_config(const Config& cfg);
};

struct Waveform {
  std::vector<double> samples;  // [-1, 1]
  int sample_rate = 16000;

  long size() const { return static_cast<long>(samples.size()); }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

struct MelSpectrogram {
  nn::Mat frames;  // T x M, natural-log mel magnitudes
  double hop_seconds = 0.0125;
  int n_mels = 80;
  long t() const { return frames.rows(); }
};

struct PitchContour {
  std::vector<double> f0;  // Hz; 0 where unvoiced
  std::vector<bool> voiced;
  long size() const { return static_cast<long>(f0.size()); }
  double median_voiced() const;  // 0 if nothing voiced
  double voiced_fraction() const;
};

// Intensity scalars for one augmentation draw; 0.5 is the identity for each
// axis. `formant_warp` is a spectral-envelope frequency ratio.
struct AugmentationSpec {
  double gamma_p = 0.5;
  double gamma_r = 0.5;
  double formant_warp = 1.0;
  long seed = 0;
};

// ---- features ----
MelSpectrogram compute_mel(const Waveform& w, const AudioConfig& cfg);
PitchContour extract_f0(const Waveform& w, const AudioConfig& cfg);

// ---- augmentations ----
// factor = 2^((2*gamma - 1) * S / 12); gamma=0.5 -> 1.0
double gamma_to_pitch_factor(double gamma, double max_semitones);
// rate = R^(2*gamma - 1); gamma=0.5 -> 1.0
double gamma_to_rate(double gamma, double max_rate);

Waveform pitch_shift(const Waveform& w, double gamma, long seed, const AugConfig& cfg);
Waveform pitch_shift_factor(const Waveform& w, double factor);
Waveform time_stretch(const Waveform& w, double gamma, const AugConfig& cfg);
Waveform time_stretch_rate(const Waveform& w, double rate);
Waveform formant_perturb(const Waveform& w, const AugmentationSpec& spec, const AugConfig& cfg);

// ---- spectral plumbing (shared with synthesis and evalkit) ----
using CMat = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic>;

// Center-padded STFT; frame t is centered on sample t*hop, so the frame
// count equals ceil(n / hop) — the same T contract as compute_mel.
CMat stft(const std::vector<double>& x, const AudioConfig& cfg);
// Weighted overlap-add inverse with per-sample window normalization; exact
// wherever window coverage is nonzero.
std::vector<double> istft(const CMat& frames, const AudioConfig& cfg, long n_out);

nn::Mat magnitude(const CMat& frames);
nn::Mat mel_filterbank(const AudioConfig& cfg);  // n_mels x (n_fft/2 + 1)
nn::Mat mel_from_magnitude(const nn::Mat& mag, const AudioConfig& cfg);
double hz_to_mel(double hz);
double mel_to_hz(double mel);

}  // namespace eadvc::dsp
