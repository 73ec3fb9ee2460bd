// SPDX-License-Identifier: Apache-2.0
#include "eadvc/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <unsupported/Eigen/FFT>

#include "eadvc/common.hpp"

namespace eadvc::dsp {

AudioConfig AudioConfig::from_config(const Config& cfg) {
  AudioConfig a;
  a.sample_rate = static_cast<int>(cfg.get_i("audio.sample_rate"));
  a.n_fft = static_cast<int>(cfg.get_i("audio.n_fft"));
  a.win_length = static_cast<int>(std::lround(cfg.get_f("audio.win_ms") * a.sample_rate / 1000.0));
  a.hop_length = static_cast<int>(std::lround(cfg.get_f("audio.hop_ms") * a.sample_rate / 1000.0));
  a.n_mels = static_cast<int>(cfg.get_i("audio.n_mels"));
  a.fmin = cfg.get_f("audio.fmin");
  a.fmax = cfg.get_f("audio.fmax");
  a.log_floor = cfg.get_f("audio.log_floor");
  require(a.sample_rate == 16000, Err::InvalidConfig, "sample rate is fixed at 16 kHz");
  return a;
}

AugConfig AugConfig::from_config(const Config& cfg) {
  AugConfig a;
  a.max_semitones = cfg.get_f("aug.max_semitones");
  a.max_rate = cfg.get_f("aug.max_rate");
  a.gamma_lo = cfg.get_f("aug.gamma_lo");
  a.gamma_hi = cfg.get_f("aug.gamma_hi");
  a.warp_lo = cfg.get_f("aug.warp_lo");
  a.warp_hi = cfg.get_f("aug.warp_hi");
  return a;
}

double PitchContour::median_voiced() const {
  std::vector<double> v;
  for (size_t i = 0; i < f0.size(); ++i)
    if (voiced[i]) v.push_back(f0[i]);
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

double PitchContour::voiced_fraction() const {
  if (voiced.empty()) return 0.0;
  long n = std::count(voiced.begin(), voiced.end(), true);
  return static_cast<double>(n) / static_cast<double>(voiced.size());
}

namespace {

std::vector<double> hann(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / n);
  return w;
}

void check_waveform(const Waveform& w, const AudioConfig& cfg) {
  require(w.sample_rate == cfg.sample_rate, Err::ShapeMismatch, "waveform sample rate mismatch");
  require(w.size() >= cfg.win_length, Err::InputTooShort,
          "waveform shorter than one analysis window");
  for (double s : w.samples) require(std::isfinite(s), Err::ShapeMismatch, "non-finite sample");
}

long frame_count(long n, int hop) { return (n + hop - 1) / hop; }

}  // namespace

double hz_to_mel(double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::exp(mel / 1127.0) - 1.0); }

CMat stft(const std::vector<double>& x, const AudioConfig& cfg) {
  const long n = static_cast<long>(x.size());
  const long t_len = frame_count(n, cfg.hop_length);
  const long n_bins = cfg.n_fft / 2 + 1;
  const auto win = hann(cfg.win_length);
  const int half = cfg.win_length / 2;

  Eigen::FFT<double> fft;
  std::vector<double> buf(cfg.n_fft);
  std::vector<std::complex<double>> spec(cfg.n_fft);
  CMat out(t_len, n_bins);
  for (long t = 0; t < t_len; ++t) {
    const long center = t * cfg.hop_length;
    std::fill(buf.begin(), buf.end(), 0.0);
    for (int i = 0; i < cfg.win_length; ++i) {
      long src = center - half + i;
      if (src >= 0 && src < n) buf[i] = x[src] * win[i];
    }
    fft.fwd(spec, buf);
    for (long k = 0; k < n_bins; ++k) out(t, k) = spec[k];
  }
  return out;
}

std::vector<double> istft(const CMat& frames, const AudioConfig& cfg, long n_out) {
  const long t_len = frames.rows();
  const long n_bins = cfg.n_fft / 2 + 1;
  require(frames.cols() == n_bins, Err::ShapeMismatch, "istft: bin count mismatch");
  const auto win = hann(cfg.win_length);
  const int half = cfg.win_length / 2;

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec(cfg.n_fft);
  std::vector<double> buf(cfg.n_fft);
  std::vector<double> acc(n_out, 0.0), norm(n_out, 0.0);
  for (long t = 0; t < t_len; ++t) {
    for (long k = 0; k < n_bins; ++k) spec[k] = frames(t, k);
    for (long k = n_bins; k < cfg.n_fft; ++k) spec[k] = std::conj(frames(t, cfg.n_fft - k));
    fft.inv(buf, spec);
    const long center = t * cfg.hop_length;
    for (int i = 0; i < cfg.win_length; ++i) {
      long dst = center - half + i;
      if (dst < 0 || dst >= n_out) continue;
      acc[dst] += buf[i] * win[i];
      norm[dst] += win[i] * win[i];
    }
  }
  for (long i = 0; i < n_out; ++i) acc[i] = norm[i] > 1e-10 ? acc[i] / norm[i] : 0.0;
  return acc;
}

nn::Mat magnitude(const CMat& frames) {
  nn::Mat m(frames.rows(), frames.cols());
  for (long i = 0; i < frames.rows(); ++i)
    for (long j = 0; j < frames.cols(); ++j) m(i, j) = std::abs(frames(i, j));
  return m;
}

nn::Mat mel_filterbank(const AudioConfig& cfg) {
  const long n_bins = cfg.n_fft / 2 + 1;
  nn::Mat fb = nn::Mat::Zero(cfg.n_mels, n_bins);
  const double mel_lo = hz_to_mel(cfg.fmin), mel_hi = hz_to_mel(cfg.fmax);
  std::vector<double> centers(cfg.n_mels + 2);
  for (int m = 0; m < cfg.n_mels + 2; ++m)
    centers[m] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * m / (cfg.n_mels + 1));
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double lo = centers[m], mid = centers[m + 1], hi = centers[m + 2];
    for (long k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate / cfg.n_fft;
      if (f <= lo || f >= hi) continue;
      fb(m, k) = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
    }
  }
  return fb;
}

nn::Mat mel_from_magnitude(const nn::Mat& mag, const AudioConfig& cfg) {
  static thread_local nn::Mat fb;
  static thread_local int fb_mels = -1;
  if (fb_mels != cfg.n_mels || fb.cols() != mag.cols()) {
    fb = mel_filterbank(cfg);
    fb_mels = cfg.n_mels;
  }
  nn::Mat mel = mag * fb.transpose();
  return mel.cwiseMax(cfg.log_floor).array().log().matrix();
}

MelSpectrogram compute_mel(const Waveform& w, const AudioConfig& cfg) {
  check_waveform(w, cfg);
  MelSpectrogram m;
  m.frames = mel_from_magnitude(magnitude(stft(w.samples, cfg)), cfg);
  m.hop_seconds = static_cast<double>(cfg.hop_length) / cfg.sample_rate;
  m.n_mels = cfg.n_mels;
  return m;
}

PitchContour extract_f0(const Waveform& w, const AudioConfig& cfg) {
  check_waveform(w, cfg);
  constexpr double kF0Min = 50.0, kF0Max = 500.0;
  constexpr double kVoicingThreshold = 0.5, kEnergyFloor = 1e-3;
  const int lag_min = static_cast<int>(cfg.sample_rate / kF0Max);
  const int lag_max = static_cast<int>(cfg.sample_rate / kF0Min);
  const int win = cfg.win_length;
  const long n = w.size();
  const long t_len = frame_count(n, cfg.hop_length);
  const int half = win / 2;

  // FFT-based autocorrelation per frame
  int acf_n = 1;
  while (acf_n < win + lag_max + 1) acf_n <<= 1;
  Eigen::FFT<double> fft;
  std::vector<double> buf(acf_n);
  std::vector<std::complex<double>> spec(acf_n);

  PitchContour pc;
  pc.f0.assign(t_len, 0.0);
  pc.voiced.assign(t_len, false);
  for (long t = 0; t < t_len; ++t) {
    const long center = t * cfg.hop_length;
    std::fill(buf.begin(), buf.end(), 0.0);
    double energy = 0.0;
    for (int i = 0; i < win; ++i) {
      long src = center - half + i;
      double v = (src >= 0 && src < n) ? w.samples[src] : 0.0;
      buf[i] = v;
      energy += v * v;
    }
    const double rms = std::sqrt(energy / win);
    if (rms < kEnergyFloor) continue;
    fft.fwd(spec, buf);
    for (int k = 0; k < acf_n; ++k) spec[k] *= std::conj(spec[k]);
    fft.inv(buf, spec);
    const double r0 = buf[0];
    if (r0 <= 0.0) continue;

    // strongest normalized peak, then earliest peak close to it (guards
    // against octave-down errors on harmonic-rich frames)
    double best = 0.0;
    for (int lag = lag_min; lag <= lag_max; ++lag) best = std::max(best, buf[lag] / r0);
    if (best < kVoicingThreshold) continue;
    int pick = 0;
    for (int lag = lag_min; lag <= lag_max; ++lag) {
      const double v = buf[lag] / r0;
      if (v >= 0.9 * best && buf[lag] >= buf[lag - 1] && buf[lag] >= buf[lag + 1]) {
        pick = lag;
        break;
      }
    }
    if (pick == 0) continue;
    double lag_refined = pick;
    const double ym = buf[pick - 1] / r0, y0 = buf[pick] / r0, yp = buf[pick + 1] / r0;
    const double denom = ym - 2.0 * y0 + yp;
    if (std::abs(denom) > 1e-12) lag_refined += 0.5 * (ym - yp) / denom;
    pc.f0[t] = cfg.sample_rate / lag_refined;
    pc.voiced[t] = true;
  }
  return pc;
}

double gamma_to_pitch_factor(double gamma, double max_semitones) {
  require(gamma > 0.0 && gamma < 1.0, Err::InvalidIntensity,
          "gamma must lie strictly inside (0,1)");
  return std::pow(2.0, (2.0 * gamma - 1.0) * max_semitones / 12.0);
}

double gamma_to_rate(double gamma, double max_rate) {
  require(gamma > 0.0 && gamma < 1.0, Err::InvalidIntensity,
          "gamma must lie strictly inside (0,1)");
  return std::pow(max_rate, 2.0 * gamma - 1.0);
}

namespace {

// Windowed-sinc resampler. speed > 1 shortens the signal and raises pitch by
// `speed`; the kernel cutoff tracks the anti-aliasing requirement.
std::vector<double> resample(const std::vector<double>& x, double speed) {
  const long n = static_cast<long>(x.size());
  const long n_out = std::max<long>(1, static_cast<long>(std::llround(n / speed)));
  constexpr int kHalfTaps = 24;
  const double cutoff = 0.92 * std::min(1.0, 1.0 / speed);
  std::vector<double> y(n_out, 0.0);
  for (long i = 0; i < n_out; ++i) {
    const double t0 = i * speed;
    const long m0 = static_cast<long>(std::ceil(t0 - kHalfTaps));
    const long m1 = static_cast<long>(std::floor(t0 + kHalfTaps));
    double acc = 0.0;
    for (long m = std::max<long>(0, m0); m <= std::min(n - 1, m1); ++m) {
      const double d = t0 - m;
      const double sinc = (std::abs(d) < 1e-12)
                              ? 1.0
                              : std::sin(M_PI * cutoff * d) / (M_PI * cutoff * d);
      const double wnd = 0.5 + 0.5 * std::cos(M_PI * d / kHalfTaps);
      acc += x[m] * cutoff * sinc * wnd;
    }
    y[i] = acc;
  }
  return y;
}

// Phase-vocoder time stretch: output duration = input duration / rate.
std::vector<double> phase_vocoder(const std::vector<double>& x, double rate) {
  constexpr int kWin = 1024, kHop = 256;
  const long n = static_cast<long>(x.size());
  const long n_out = std::max<long>(kWin, static_cast<long>(std::llround(n / rate)));
  const long k_frames = (n_out - kWin) / kHop + 2;
  const auto win = hann(kWin);
  const long n_bins = kWin / 2 + 1;

  std::vector<double> padded(x);
  padded.resize(n + kWin, 0.0);

  Eigen::FFT<double> fft;
  std::vector<double> buf(kWin);
  std::vector<std::complex<double>> spec(kWin);

  auto analyze = [&](long pos, Eigen::VectorXcd& out) {
    for (int i = 0; i < kWin; ++i)
      buf[i] = (pos + i < static_cast<long>(padded.size())) ? padded[pos + i] * win[i] : 0.0;
    fft.fwd(spec, buf);
    for (long k = 0; k < n_bins; ++k) out(k) = spec[k];
  };

  Eigen::VectorXcd cur(n_bins), prev(n_bins);
  Eigen::VectorXd out_phase(n_bins), out_mag(n_bins);
  std::vector<double> acc(n_out, 0.0), norm(n_out, 0.0);

  long prev_pos = 0;
  for (long f = 0; f < k_frames; ++f) {
    const long pos = std::min<long>(static_cast<long>(std::llround(f * kHop * rate)),
                                    std::max<long>(0, n - 1));
    analyze(pos, cur);
    if (f == 0) {
      for (long k = 0; k < n_bins; ++k) out_phase(k) = std::arg(cur(k));
    } else {
      const double dt = std::max<long>(1, pos - prev_pos);
      for (long k = 0; k < n_bins; ++k) {
        const double omega = 2.0 * M_PI * k / kWin;
        double dphi = std::arg(cur(k)) - std::arg(prev(k)) - omega * dt;
        dphi -= 2.0 * M_PI * std::round(dphi / (2.0 * M_PI));
        const double omega_inst = omega + dphi / dt;
        out_phase(k) += omega_inst * kHop;
      }
    }
    for (long k = 0; k < n_bins; ++k) out_mag(k) = std::abs(cur(k));
    prev = cur;
    prev_pos = pos;

    // overlap-add this synthesis frame
    for (long k = 0; k < n_bins; ++k)
      spec[k] = std::polar(out_mag(k), out_phase(k));
    for (long k = n_bins; k < kWin; ++k) spec[k] = std::conj(spec[kWin - k]);
    fft.inv(buf, spec);
    const long base = f * kHop;
    for (int i = 0; i < kWin; ++i) {
      const long dst = base + i;
      if (dst >= n_out) break;
      acc[dst] += buf[i] * win[i];
      norm[dst] += win[i] * win[i];
    }
  }
  for (long i = 0; i < n_out; ++i) acc[i] = norm[i] > 1e-10 ? acc[i] / norm[i] : 0.0;
  acc.resize(static_cast<size_t>(std::max<long>(1, std::llround(n / rate))), 0.0);
  return acc;
}

}  // namespace

Waveform pitch_shift_factor(const Waveform& w, double factor) {
  require(factor > 0.0, Err::InvalidIntensity, "pitch factor must be positive");
  if (std::abs(factor - 1.0) < 1e-9) return w;
  // stretch duration by `factor`, then speed up playback by the same amount
  std::vector<double> stretched = phase_vocoder(w.samples, 1.0 / factor);
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples = resample(stretched, factor);
  return out;
}

Waveform pitch_shift(const Waveform& w, double gamma, long /*seed*/, const AugConfig& cfg) {
  return pitch_shift_factor(w, gamma_to_pitch_factor(gamma, cfg.max_semitones));
}

Waveform time_stretch_rate(const Waveform& w, double rate) {
  require(rate > 0.0, Err::InvalidIntensity, "stretch rate must be positive");
  if (std::abs(rate - 1.0) < 1e-9) return w;
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples = phase_vocoder(w.samples, rate);
  return out;
}

Waveform time_stretch(const Waveform& w, double gamma, const AugConfig& cfg) {
  return time_stretch_rate(w, gamma_to_rate(gamma, cfg.max_rate));
}

Waveform formant_perturb(const Waveform& w, const AugmentationSpec& spec, const AugConfig& cfg) {
  require(spec.formant_warp >= cfg.warp_lo && spec.formant_warp <= cfg.warp_hi,
          Err::InvalidPerturbation, "formant warp outside configured range");
  AudioConfig acfg;  // repo-fixed analysis config
  check_waveform(w, acfg);
  const double rho = spec.formant_warp;

  CMat frames = stft(w.samples, acfg);
  const long t_len = frames.rows(), n_bins = frames.cols();
  const int n_fft = acfg.n_fft;
  constexpr int kLifter = 30;  // below the shortest pitch period (f0 <= 500 Hz)

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> full(n_fft), ceps(n_fft), envc(n_fft);
  for (long t = 0; t < t_len; ++t) {
    // log-magnitude, symmetric spectrum
    for (long k = 0; k < n_bins; ++k)
      full[k] = std::log(std::abs(frames(t, k)) + 1e-10);
    for (long k = n_bins; k < n_fft; ++k) full[k] = full[n_fft - k];
    fft.inv(ceps, full);
    for (int q = 0; q < n_fft; ++q) {
      const int qq = std::min(q, n_fft - q);
      if (qq > kLifter) ceps[q] = 0.0;
    }
    fft.fwd(envc, ceps);
    // warp the envelope along frequency: E'(f) = E(f / rho)
    Eigen::VectorXd env(n_bins), warped(n_bins);
    for (long k = 0; k < n_bins; ++k) env(k) = envc[k].real();
    for (long k = 0; k < n_bins; ++k) {
      const double src = k / rho;
      const long k0 = std::min<long>(static_cast<long>(src), n_bins - 1);
      const long k1 = std::min<long>(k0 + 1, n_bins - 1);
      const double frac = src - k0;
      warped(k) = env(k0) * (1.0 - frac) + env(k1) * frac;
    }
    for (long k = 0; k < n_bins; ++k) {
      const double logmag = std::log(std::abs(frames(t, k)) + 1e-10);
      const double newmag = std::exp(logmag - env(k) + warped(k));
      frames(t, k) = std::polar(newmag, std::arg(frames(t, k)));
    }
  }
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples = istft(frames, acfg, w.size());
  return out;
}

}  // namespace eadvc::dsp
