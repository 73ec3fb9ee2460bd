// SPDX-License-Identifier: Apache-2.0
#include "eadvc/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "eadvc/io.hpp"

namespace eadvc::corpus {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kSampleRate = 16000;
constexpr int kHop = 200;
constexpr double kF0GridBase = 110.0;  // speaker i sits 2i semitones above

// symbol -> two resonance centers (Hz); 4 low x 6 high grid
const double kLoCenters[4] = {420.0, 620.0, 880.0, 1200.0};
const double kHiCenters[6] = {1500.0, 1950.0, 2500.0, 3200.0, 4100.0, 5200.0};

// global formant profiles: spectral tilt (dB/octave about 1 kHz) + resonance
const double kProfileTilt[4] = {-4.5, -1.5, 1.5, 4.5};
const double kProfileBump[4] = {1000.0, 1700.0, 2600.0, 3600.0};

// rate buckets (syllables/s) with gaps so rhythm probes have clean classes
const double kRateBuckets[3][2] = {{2.0, 2.8}, {3.4, 4.6}, {5.4, 7.0}};

double log2_safe(double x) { return std::log2(std::max(x, 1e-9)); }

// speaker+symbol spectral envelope in dB at frequency f
double envelope_db(const SpeakerAttrs& voice, int symbol, double f) {
  double g = -6.0 * log2_safe(1.0 + f / 500.0);  // gentle source rolloff
  const double lo = kLoCenters[symbol % 4], hi = kHiCenters[symbol / 4];
  const double dlo = log2_safe(f / lo), dhi = log2_safe(f / hi);
  g += 14.0 * std::exp(-0.5 * dlo * dlo / (0.18 * 0.18));
  g += 14.0 * std::exp(-0.5 * dhi * dhi / (0.18 * 0.18));
  g += voice.tilt_db_oct * log2_safe(f / 1000.0);
  const double db = log2_safe(f / voice.bump_hz);
  g += 9.0 * std::exp(-0.5 * db * db / (0.25 * 0.25));
  return g;
}

struct SplitPlan {
  std::vector<int> train, val, test;
};

// The 12-speaker default uses a hand-designed table: train covers every F0
// level and every profile exactly twice; val/test speakers differ in both.
SplitPlan split_plan(int n) {
  SplitPlan p;
  if (n == 12) {
    p.train = {0, 1, 3, 4, 6, 8, 9, 11};
    p.val = {5, 10};
    p.test = {2, 7};
    return p;
  }
  int k = n >= 4 ? std::max(1, n / 6) : 0;
  for (int i = 0; i < n - 2 * k; ++i) p.train.push_back(i);
  for (int i = n - 2 * k; i < n - k; ++i) p.val.push_back(i);
  for (int i = n - k; i < n; ++i) p.test.push_back(i);
  return p;
}

int profile_for_speaker(int id, int n) {
  if (n == 12) {
    static const int table[12] = {0, 1, 0, 2, 3, 2, 1, 3, 2, 3, 1, 0};
    return table[id];
  }
  return id % 4;
}

}  // namespace

const std::vector<int>& Manifest::split(const std::string& name) const {
  auto it = splits.find(name);
  require(it != splits.end(), Err::EmptySplit, "unknown split " + name);
  return it->second;
}

SpeakerAttrs speaker_attrs(const ToyCorpusSpec& spec, int speaker) {
  require(speaker >= 0 && speaker < spec.n_speakers, Err::InvalidConfig, "speaker out of range");
  SpeakerAttrs a;
  a.id = speaker;
  a.base_f0 = kF0GridBase * std::pow(2.0, speaker / 6.0);  // 2 semitones apart
  a.f0_level = (speaker * 4) / std::max(1, spec.n_speakers);
  if (spec.n_speakers == 12) a.f0_level = speaker / 3;
  a.formant_profile_id = profile_for_speaker(speaker, spec.n_speakers);
  Rng rng = Rng(static_cast<std::uint64_t>(spec.seed)).fork(1000 + speaker);
  a.tilt_db_oct = kProfileTilt[a.formant_profile_id] + rng.uniform(-0.4, 0.4);
  a.bump_hz = kProfileBump[a.formant_profile_id] * rng.uniform(0.95, 1.05);
  return a;
}

UttParams utt_params(const ToyCorpusSpec& spec, int speaker, int utt_idx) {
  Rng rng = Rng(static_cast<std::uint64_t>(spec.seed))
                .fork(2000 + speaker)
                .fork(static_cast<std::uint64_t>(utt_idx));
  UttParams p;
  p.rate_bucket = rng.uniform_int(0, 2);
  p.rate = rng.uniform(kRateBuckets[p.rate_bucket][0], kRateBuckets[p.rate_bucket][1]);
  const double target_frames = rng.uniform(55.0, 85.0);
  const double frames_per_syll = kFramesPerSecond / p.rate;
  int n_syll = std::clamp(static_cast<int>(std::lround(target_frames / frames_per_syll)), 2, 12);
  int prev = -1;
  for (int s = 0; s < n_syll; ++s) {
    int sym = rng.uniform_int(0, kVocabSize - 1);
    if (sym == prev) sym = (sym + 1 + rng.uniform_int(0, kVocabSize - 3)) % kVocabSize;
    prev = sym;
    p.symbols.push_back(sym);
    int dur = std::max(6, static_cast<int>(std::lround(frames_per_syll * rng.uniform(0.85, 1.15))));
    p.durations.push_back(dur);
  }
  p.vibrato_phase = rng.uniform(0.0, 2.0 * M_PI);
  p.noise_seed = rng.next_u64();
  return p;
}

dsp::Waveform synth_utterance(const SpeakerAttrs& voice, const UttParams& params) {
  const long total_frames =
      std::accumulate(params.durations.begin(), params.durations.end(), 0L);
  const long n = total_frames * kHop;
  std::vector<double> x(n, 0.0);

  // phase-continuous harmonic stack; per-syllable spectral envelope
  const int max_harm = static_cast<int>(7400.0 / (voice.base_f0 * 1.05));
  std::vector<double> phase(max_harm + 1, 0.0);
  Rng noise(params.noise_seed);

  long sample = 0;
  for (size_t syll = 0; syll < params.symbols.size(); ++syll) {
    const long n_syll = params.durations[syll] * kHop;
    const long n_voiced = static_cast<long>(std::lround(0.82 * n_syll));
    const int symbol = params.symbols[syll];
    // harmonic amplitudes for this syllable (envelope sampled at base f0)
    std::vector<double> amp(max_harm + 1, 0.0);
    for (int h = 1; h <= max_harm; ++h) {
      const double f = h * voice.base_f0;
      if (f > 7400.0) break;
      amp[h] = std::pow(10.0, envelope_db(voice, symbol, f) / 20.0) / std::pow(h, 0.3);
    }
    for (long i = 0; i < n_syll; ++i, ++sample) {
      const double tt = static_cast<double>(sample) / kSampleRate;
      const double pos = static_cast<double>(sample) / n;
      double env = 0.0;
      if (i < n_voiced) {
        const double u = static_cast<double>(i) / n_voiced;
        if (u < 0.2) {
          const double r = u / 0.2;
          env = r * r;
        } else if (u > 0.75) {
          const double r = (1.0 - u) / 0.25;
          env = r * r;
        } else {
          env = 1.0;
        }
      }
      const double f0 = voice.base_f0 * (1.0 - 0.04 * pos) *
                        (1.0 + 0.02 * std::sin(2.0 * M_PI * 3.5 * tt + params.vibrato_phase));
      double v = 0.0;
      if (env > 0.0) {
        for (int h = 1; h <= max_harm; ++h) {
          if (amp[h] == 0.0) continue;
          v += amp[h] * std::sin(phase[h]);
        }
        v *= env;
      }
      for (int h = 1; h <= max_harm; ++h) phase[h] += 2.0 * M_PI * h * f0 / kSampleRate;
      x[sample] = v + 0.0015 * noise.gaussian();
    }
  }
  double peak = 1e-9;
  for (double v : x) peak = std::max(peak, std::abs(v));
  const double gain = 0.42 / peak;
  for (double& v : x) v *= gain;

  dsp::Waveform w;
  w.sample_rate = kSampleRate;
  w.samples = std::move(x);
  return w;
}

Manifest generate_toy_corpus(const ToyCorpusSpec& spec, const std::string& out_dir) {
  require(spec.n_speakers >= 2, Err::InvalidConfig, "need at least 2 speakers");
  require(spec.n_speakers <= 14, Err::InvalidConfig,
          "toy F0 grid supports at most 14 speakers (tracker range 50-500 Hz)");
  require(spec.utts_per_speaker >= 1, Err::InvalidConfig, "need at least 1 utterance");

  fs::create_directories(fs::path(out_dir) / "wav");
  fs::create_directories(fs::path(out_dir) / "phn");

  Manifest m;
  m.spec = spec;
  m.root = out_dir;
  SplitPlan plan = split_plan(spec.n_speakers);
  m.splits["train"] = plan.train;
  m.splits["val"] = plan.val;
  m.splits["test"] = plan.test;

  for (int s = 0; s < spec.n_speakers; ++s) {
    const SpeakerAttrs voice = speaker_attrs(spec, s);
    for (int u = 0; u < spec.utts_per_speaker; ++u) {
      const UttParams params = utt_params(spec, s, u);
      const dsp::Waveform wav = synth_utterance(voice, params);
      char name[64];
      std::snprintf(name, sizeof(name), "spk%02d_utt%03d", s, u);
      ManifestEntry e;
      e.wav_path = std::string("wav/") + name + ".wav";
      e.phn_path = std::string("phn/") + name + ".phn";
      e.speaker_id = s;
      e.truth = {voice.base_f0, params.rate, voice.formant_profile_id};
      io::write_wav((fs::path(out_dir) / e.wav_path).string(), wav.samples, kSampleRate);
      std::ofstream phn(fs::path(out_dir) / e.phn_path);
      for (size_t i = 0; i < params.symbols.size(); ++i) {
        char sym[8];
        std::snprintf(sym, sizeof(sym), "s%02d", params.symbols[i]);
        phn << sym << " " << params.durations[i] << "\n";
      }
      require(phn.good(), Err::IoError, "cannot write phoneme file");
      m.entries.push_back(std::move(e));
    }
  }

  json j;
  j["seed"] = spec.seed;
  j["n_speakers"] = spec.n_speakers;
  j["utts_per_speaker"] = spec.utts_per_speaker;
  j["splits"] = {{"train", plan.train}, {"val", plan.val}, {"test", plan.test}};
  json entries = json::array();
  for (const auto& e : m.entries) {
    entries.push_back({{"wav", e.wav_path},
                       {"phn", e.phn_path},
                       {"speaker_id", e.speaker_id},
                       {"truth",
                        {{"base_f0", e.truth.base_f0},
                         {"rate", e.truth.rate},
                         {"formant_profile_id", e.truth.formant_profile_id}}}});
  }
  j["entries"] = std::move(entries);
  std::ofstream mf(fs::path(out_dir) / "manifest.json");
  mf << j.dump(2) << "\n";
  require(mf.good(), Err::IoError, "cannot write manifest");
  return m;
}

Manifest load_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  require(in.good(), Err::MalformedManifest, "cannot open " + manifest_path);
  json j = json::parse(in, nullptr, false);
  require(!j.is_discarded(), Err::MalformedManifest, manifest_path + ": invalid JSON");

  Manifest m;
  m.root = fs::path(manifest_path).parent_path().string();
  try {
    m.spec.seed = j.at("seed").get<long>();
    m.spec.n_speakers = j.at("n_speakers").get<int>();
    m.spec.utts_per_speaker = j.at("utts_per_speaker").get<int>();
    for (const auto& name : {"train", "val", "test"})
      m.splits[name] = j.at("splits").at(name).get<std::vector<int>>();
    for (const auto& ej : j.at("entries")) {
      ManifestEntry e;
      e.wav_path = ej.at("wav").get<std::string>();
      e.phn_path = ej.at("phn").get<std::string>();
      e.speaker_id = ej.at("speaker_id").get<int>();
      e.truth.base_f0 = ej.at("truth").at("base_f0").get<double>();
      e.truth.rate = ej.at("truth").at("rate").get<double>();
      e.truth.formant_profile_id = ej.at("truth").at("formant_profile_id").get<int>();
      m.entries.push_back(std::move(e));
    }
  } catch (const json::exception& ex) {
    fail(Err::MalformedManifest, manifest_path + ": " + ex.what());
  }

  // split hygiene: disjoint, and every entry's speaker in exactly one split
  std::set<int> seen;
  for (const auto& [name, ids] : m.splits) {
    for (int id : ids) {
      require(!seen.count(id), Err::OverlappingSplits,
              "speaker " + std::to_string(id) + " appears in more than one split");
      seen.insert(id);
    }
  }
  for (const auto& e : m.entries) {
    require(seen.count(e.speaker_id), Err::MalformedManifest,
            "entry speaker " + std::to_string(e.speaker_id) + " not in any split");
    const auto wav = fs::path(m.root) / e.wav_path;
    require(fs::exists(wav), Err::MissingAudio, wav.string());
    const auto phn = fs::path(m.root) / e.phn_path;
    require(fs::exists(phn), Err::MissingAudio, phn.string());
  }
  return m;
}

namespace {

std::pair<std::vector<int>, std::vector<int>> read_phn(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Err::MissingAudio, path);
  std::vector<int> symbols, durations;
  std::string sym;
  int dur = 0;
  while (in >> sym >> dur) {
    require(sym.size() >= 2 && sym[0] == 's', Err::MalformedManifest,
            path + ": bad symbol " + sym);
    int id = std::stoi(sym.substr(1));
    require(id >= 0 && id < kVocabSize, Err::MalformedManifest, path + ": symbol out of range");
    require(dur > 0, Err::NonPositiveDuration, path);
    symbols.push_back(id);
    durations.push_back(dur);
  }
  require(!symbols.empty(), Err::MalformedManifest, path + ": empty phoneme file");
  return {symbols, durations};
}

}  // namespace

Dataset::Dataset(const Manifest& manifest, const Config& cfg, bool with_augmentations)
    : manifest_(manifest), with_aug_(with_augmentations) {
  const dsp::AudioConfig acfg = dsp::AudioConfig::from_config(cfg);
  const dsp::AugConfig aug = dsp::AugConfig::from_config(cfg);
  const int n_var = static_cast<int>(cfg.get_i("aug.cache_variants"));

  std::map<int, int> utt_counter;
  for (const auto& e : manifest.entries) {
    UttData d;
    d.speaker_id = e.speaker_id;
    d.utt_index = utt_counter[e.speaker_id]++;
    d.truth = e.truth;
    auto [samples, sr] = io::read_wav((fs::path(manifest.root) / e.wav_path).string());
    dsp::Waveform w{std::move(samples), sr};
    std::tie(d.symbols, d.durations) = read_phn((fs::path(manifest.root) / e.phn_path).string());
    d.mel = dsp::compute_mel(w, acfg).frames;
    d.f0 = dsp::extract_f0(w, acfg);
    const long want = std::accumulate(d.durations.begin(), d.durations.end(), 0L);
    require(want == d.mel.rows(), Err::MalformedManifest,
            e.wav_path + ": durations do not cover the mel frames");

    if (with_aug_) {
      // variant pool is a function of the corpus seed, independent of the
      // training seed, so feature caches are reusable across runs
      Rng rng = Rng(static_cast<std::uint64_t>(manifest.spec.seed))
                    .fork(7000 + e.speaker_id)
                    .fork(static_cast<std::uint64_t>(d.utt_index));
      for (int v = 0; v < n_var; ++v) {
        AugVariant pv;
        pv.gamma_p = rng.uniform(aug.gamma_lo, aug.gamma_hi);
        pv.mel = dsp::compute_mel(dsp::pitch_shift(w, pv.gamma_p, 0, aug), acfg).frames;
        d.pitch_variants.push_back(std::move(pv));

        AugVariant rv;
        rv.gamma_r = rng.uniform(aug.gamma_lo, aug.gamma_hi);
        rv.mel = dsp::compute_mel(dsp::time_stretch(w, rv.gamma_r, aug), acfg).frames;
        d.rhythm_variants.push_back(std::move(rv));

        AugVariant bv;
        bv.gamma_p = rng.uniform(aug.gamma_lo, aug.gamma_hi);
        bv.gamma_r = rng.uniform(aug.gamma_lo, aug.gamma_hi);
        bv.mel = dsp::compute_mel(
                     dsp::pitch_shift(dsp::time_stretch(w, bv.gamma_r, aug), bv.gamma_p, 0, aug),
                     acfg)
                     .frames;
        d.both_variants.push_back(std::move(bv));
      }
      dsp::AugmentationSpec fp;
      fp.formant_warp = rng.uniform(aug.warp_lo, aug.warp_hi);
      d.warp = fp.formant_warp;
      d.perturbed_mel = dsp::compute_mel(dsp::formant_perturb(w, fp, aug), acfg).frames;
    }
    utts_.push_back(std::move(d));
  }
}

std::vector<long> Dataset::split_indices(const std::string& split) const {
  const auto& ids = manifest_.split(split);
  std::set<int> members(ids.begin(), ids.end());
  std::vector<long> out;
  for (long i = 0; i < static_cast<long>(utts_.size()); ++i)
    if (members.count(utts_[i].speaker_id)) out.push_back(i);
  return out;
}

AugPolicy aug_policy_from_string(const std::string& s) {
  if (s == "mixed") return AugPolicy::Mixed;
  if (s == "pitch-only") return AugPolicy::PitchOnly;
  if (s == "rhythm-only") return AugPolicy::RhythmOnly;
  if (s == "both") return AugPolicy::BothAxes;
  fail(Err::InvalidConfig, "unknown aug policy " + s);
}

BatchStream::BatchStream(const Dataset& data, const std::string& split, int batch_size,
                         AugPolicy policy, long seed)
    : data_(data), batch_size_(batch_size), policy_(policy), seed_(seed) {
  indices_ = data.split_indices(split);
  require(!indices_.empty(), Err::EmptySplit, "split '" + split + "' has no utterances");
  reshuffle();
}

void BatchStream::reshuffle() {
  ++epoch_;
  cursor_ = 0;
  order_ = indices_;
  Rng rng = Rng(static_cast<std::uint64_t>(seed_)).fork(static_cast<std::uint64_t>(epoch_));
  for (size_t i = order_.size(); i > 1; --i)
    std::swap(order_[i - 1], order_[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
}

Batch BatchStream::next() {
  if (cursor_ >= order_.size()) reshuffle();
  Batch batch;
  Rng rng = Rng(static_cast<std::uint64_t>(seed_))
                .fork(static_cast<std::uint64_t>(epoch_) * 1000003ull + cursor_);
  const size_t end = std::min(order_.size(), cursor_ + static_cast<size_t>(batch_size_));
  long t_max = 0;
  for (size_t i = cursor_; i < end; ++i) {
    const UttData& u = data_.utt(order_[i]);
    BatchItem item;
    item.utt = order_[i];
    item.mel = &u.mel;
    item.perturbed_mel = u.perturbed_mel.size() ? &u.perturbed_mel : nullptr;
    item.speaker_id = u.speaker_id;
    item.symbols = &u.symbols;
    item.durations = &u.durations;
    if (data_.has_augmentations()) {
      AugPolicy pick = policy_;
      if (policy_ == AugPolicy::Mixed) {
        const double r = rng.uniform();
        pick = r < 0.25   ? AugPolicy::PitchOnly
               : r < 0.5  ? AugPolicy::RhythmOnly
                          : AugPolicy::BothAxes;
      }
      const auto& pool = pick == AugPolicy::PitchOnly    ? u.pitch_variants
                         : pick == AugPolicy::RhythmOnly ? u.rhythm_variants
                                                         : u.both_variants;
      const auto& var = pool[static_cast<size_t>(
          rng.uniform_int(0, static_cast<int>(pool.size()) - 1))];
      item.gamma_p = var.gamma_p;
      item.gamma_r = var.gamma_r;
      item.aug_mel = &var.mel;
    }
    t_max = std::max({t_max, u.mel.rows(), item.aug_mel ? item.aug_mel->rows() : 0L});
    batch.items.push_back(item);
  }
  cursor_ = end;

  const long b = batch.size();
  batch.mask = nn::Mat::Zero(b, t_max);
  for (long i = 0; i < b; ++i) {
    const nn::Mat& mel = *batch.items[i].mel;
    nn::Mat padded = nn::Mat::Zero(t_max, mel.cols());
    padded.topRows(mel.rows()) = mel;
    batch.padded_mels.push_back(std::move(padded));
    batch.lengths.push_back(mel.rows());
    batch.mask.row(i).head(mel.rows()).setOnes();
    if (batch.items[i].aug_mel) {
      const nn::Mat& am = *batch.items[i].aug_mel;
      nn::Mat pa = nn::Mat::Zero(t_max, am.cols());
      pa.topRows(am.rows()) = am;
      batch.padded_aug.push_back(std::move(pa));
    }
  }
  return batch;
}

}  // namespace eadvc::corpus
