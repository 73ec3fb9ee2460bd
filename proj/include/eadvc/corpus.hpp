// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "eadvc/config.hpp"
#include "eadvc/dsp.hpp"

namespace eadvc::corpus {

inline constexpr int kVocabSize = 24;
inline constexpr int kFramesPerSecond = 80;  // 12.5 ms hop

struct ToyCorpusSpec {
  int n_speakers = 12;
  int utts_per_speaker = 30;
  long seed = 7;
};

// Fixed per-speaker voice: a base F0 on a 2-semitone grid (every pair of
// speakers differs by at least 2 semitones) and one of four global formant
// profiles. Profiles and F0 levels are assigned in a decorrelated pattern so
// attribute probes transfer across speakers.
struct SpeakerAttrs {
  int id = 0;
  double base_f0 = 110.0;
  int f0_level = 0;             // 0..3 pitch bucket
  int formant_profile_id = 0;   // 0..3
  double tilt_db_oct = 0.0;     // profile tilt + per-speaker variation
  double bump_hz = 1000.0;      // profile resonance center
};

struct UttTruth {
  double base_f0 = 0.0;
  double rate = 0.0;  // syllables / s
  int formant_profile_id = 0;
};

// Everything needed to re-synthesize an utterance deterministically. The
// evaluation kit uses this to build ground-truth parallel references.
struct UttParams {
  std::vector<int> symbols;
  std::vector<int> durations;  // frames per symbol, gap included
  double rate = 4.0;
  int rate_bucket = 1;
  double vibrato_phase = 0.0;
  std::uint64_t noise_seed = 0;
};

struct ManifestEntry {
  std::string wav_path;
  std::string phn_path;
  int speaker_id = 0;
  UttTruth truth;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::map<std::string, std::vector<int>> splits;  // train / val / test
  ToyCorpusSpec spec;
  std::string root;

  const std::vector<int>& split(const std::string& name) const;
};

// ---- deterministic generation ----
SpeakerAttrs speaker_attrs(const ToyCorpusSpec& spec, int speaker);
UttParams utt_params(const ToyCorpusSpec& spec, int speaker, int utt_idx);
dsp::Waveform synth_utterance(const SpeakerAttrs& voice, const UttParams& params);

Manifest generate_toy_corpus(const ToyCorpusSpec& spec, const std::string& out_dir);
Manifest load_manifest(const std::string& manifest_path);

// ---- training view: cached features and augmented variants ----
struct AugVariant {
  double gamma_p = 0.5;
  double gamma_r = 0.5;
  nn::Mat mel;
};

struct UttData {
  int speaker_id = 0;
  int utt_index = 0;  // within speaker
  std::vector<int> symbols;
  std::vector<int> durations;
  UttTruth truth;
  nn::Mat mel;  // T x n_mels
  dsp::PitchContour f0;
  std::vector<AugVariant> pitch_variants;   // gamma_r == 0.5
  std::vector<AugVariant> rhythm_variants;  // gamma_p == 0.5
  std::vector<AugVariant> both_variants;
  nn::Mat perturbed_mel;  // formant-perturbed (timbre-free input for BNFs)
  double warp = 1.0;
  long frames() const { return mel.rows(); }
};

class Dataset {
 public:
  Dataset(const Manifest& manifest, const Config& cfg, bool with_augmentations);

  const std::vector<UttData>& utts() const { return utts_; }
  const UttData& utt(long i) const { return utts_[static_cast<size_t>(i)]; }
  std::vector<long> split_indices(const std::string& split) const;
  const Manifest& manifest() const { return manifest_; }
  int n_speakers() const { return manifest_.spec.n_speakers; }
  bool has_augmentations() const { return with_aug_; }

 private:
  Manifest manifest_;
  std::vector<UttData> utts_;
  bool with_aug_ = false;
};

// ---- batching ----
enum class AugPolicy { Mixed, PitchOnly, RhythmOnly, BothAxes };
AugPolicy aug_policy_from_string(const std::string& s);

struct BatchItem {
  long utt = 0;  // dataset index
  double gamma_p = 0.5, gamma_r = 0.5;
  const nn::Mat* mel = nullptr;
  const nn::Mat* aug_mel = nullptr;
  const nn::Mat* perturbed_mel = nullptr;
  int speaker_id = 0;
  const std::vector<int>* symbols = nullptr;
  const std::vector<int>* durations = nullptr;
};

// Items are index-aligned with their padded views; mask(b, t) == 1 iff frame
// t is real for item b. Losses consume the mask-derived lengths, so padded
// frames can never contribute.
struct Batch {
  std::vector<BatchItem> items;
  std::vector<nn::Mat> padded_mels;
  std::vector<nn::Mat> padded_aug;
  nn::Mat mask;  // B x T_max
  std::vector<long> lengths;
  long size() const { return static_cast<long>(items.size()); }
};

class BatchStream {
 public:
  BatchStream(const Dataset& data, const std::string& split, int batch_size, AugPolicy policy,
              long seed);
  Batch next();
  long epoch() const { return epoch_; }

 private:
  void reshuffle();
  const Dataset& data_;
  std::vector<long> indices_;
  std::vector<long> order_;
  int batch_size_;
  AugPolicy policy_;
  long seed_;
  long epoch_ = -1;
  size_t cursor_ = 0;
};

}  // namespace eadvc::corpus
