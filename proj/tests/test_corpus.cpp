// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "eadvc/corpus.hpp"
#include "eadvc/io.hpp"
#include "testutil.hpp"

using namespace eadvc;
using namespace eadvc::corpus;
namespace fs = std::filesystem;

namespace {

ToyCorpusSpec small_spec() {
  ToyCorpusSpec s;
  s.n_speakers = 4;
  s.utts_per_speaker = 3;
  s.seed = 21;
  return s;
}

}  // namespace

TEST(ToyCorpus, ByteIdenticalAcrossRuns) {
  testutil::ScopedTempDir d1("corpus_a"), d2("corpus_b");
  ToyCorpusSpec spec;
  spec.n_speakers = 8;
  spec.utts_per_speaker = 5;
  spec.seed = 7;
  generate_toy_corpus(spec, d1.str());
  generate_toy_corpus(spec, d2.str());
  EXPECT_EQ(io::hash_tree(d1.str()), io::hash_tree(d2.str()));

  ToyCorpusSpec other = spec;
  other.seed = 8;
  testutil::ScopedTempDir d3("corpus_c");
  generate_toy_corpus(other, d3.str());
  EXPECT_NE(io::hash_tree(d1.str()), io::hash_tree(d3.str()));
}

TEST(ToyCorpus, SpeakerVoicesAreSeparated) {
  ToyCorpusSpec spec;  // default 12 speakers
  std::set<std::pair<int, int>> combos;
  for (int i = 0; i < spec.n_speakers; ++i) {
    SpeakerAttrs a = speaker_attrs(spec, i);
    combos.insert({a.f0_level, a.formant_profile_id});
    for (int j = i + 1; j < spec.n_speakers; ++j) {
      SpeakerAttrs b = speaker_attrs(spec, j);
      const double semitones = 12.0 * std::abs(std::log2(b.base_f0 / a.base_f0));
      EXPECT_GE(semitones, 2.0 - 1e-9) << i << " vs " << j;
    }
  }
}

TEST(ToyCorpus, TrackedF0MatchesTruth) {
  ToyCorpusSpec spec;
  dsp::AudioConfig acfg;
  for (int speaker : {0, 5, 11}) {
    SpeakerAttrs voice = speaker_attrs(spec, speaker);
    dsp::Waveform w = synth_utterance(voice, utt_params(spec, speaker, 2));
    const double median = dsp::extract_f0(w, acfg).median_voiced();
    EXPECT_NEAR(median, voice.base_f0, 0.05 * voice.base_f0) << "speaker " << speaker;
  }
}

TEST(Manifest, LoadValidatesInvariants) {
  testutil::ScopedTempDir dir("manifest");
  generate_toy_corpus(small_spec(), dir.str());
  const std::string mpath = (dir.path() / "manifest.json").string();
  Manifest m = load_manifest(mpath);
  EXPECT_EQ(m.entries.size(), 12u);

  // split overlap
  std::string text = io::read_text_file(mpath);
  {
    auto j = nlohmann::json::parse(text);
    j["splits"]["val"] = {0};  // speaker 0 is also in train
    std::ofstream out(mpath);
    out << j.dump(2);
  }
  try {
    load_manifest(mpath);
    FAIL() << "expected OverlappingSplits";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Err::OverlappingSplits);
  }

  // restore, then delete a wav -> MissingAudio naming the path
  {
    std::ofstream out(mpath);
    out << text;
  }
  fs::remove(dir.path() / "wav" / "spk01_utt001.wav");
  try {
    load_manifest(mpath);
    FAIL() << "expected MissingAudio";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Err::MissingAudio);
    EXPECT_NE(std::string(e.what()).find("spk01_utt001.wav"), std::string::npos);
  }

  // malformed json
  {
    std::ofstream out(mpath);
    out << "{ not json";
  }
  try {
    load_manifest(mpath);
    FAIL() << "expected MalformedManifest";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Err::MalformedManifest);
  }
}

TEST(Dataset, FramesMatchDurations) {
  testutil::ScopedTempDir dir("dataset");
  Manifest m = generate_toy_corpus(small_spec(), dir.str());
  Config cfg = Config::defaults();
  Dataset data(m, cfg, /*with_augmentations=*/false);
  ASSERT_EQ(data.utts().size(), 12u);
  for (const auto& u : data.utts()) {
    long total = 0;
    for (int d : u.durations) total += d;
    EXPECT_EQ(total, u.frames());
    EXPECT_EQ(static_cast<long>(u.f0.size()), u.frames());
  }
}

TEST(Batching, SizesPolicyAndDeterminism) {
  testutil::ScopedTempDir dir("batches");
  ToyCorpusSpec spec;
  spec.n_speakers = 2;  // both speakers land in train for tiny corpora
  spec.utts_per_speaker = 5;
  spec.seed = 3;
  Manifest m = generate_toy_corpus(spec, dir.str());
  Config cfg = Config::defaults();
  cfg.set("aug.cache_variants", "1");
  Dataset data(m, cfg, true);

  BatchStream s(data, "train", 4, AugPolicy::PitchOnly, 99);
  Batch b1 = s.next(), b2 = s.next(), b3 = s.next();
  EXPECT_EQ(b1.size(), 4);
  EXPECT_EQ(b2.size(), 4);
  EXPECT_EQ(b3.size(), 2);
  for (const Batch* b : {&b1, &b2, &b3})
    for (const auto& item : b->items) EXPECT_DOUBLE_EQ(item.gamma_r, 0.5);

  // same seed -> identical sequence; mask rows match lengths
  BatchStream r1(data, "train", 4, AugPolicy::Mixed, 123);
  BatchStream r2(data, "train", 4, AugPolicy::Mixed, 123);
  for (int i = 0; i < 6; ++i) {
    Batch x = r1.next(), y = r2.next();
    ASSERT_EQ(x.size(), y.size());
    for (long k = 0; k < x.size(); ++k) {
      EXPECT_EQ(x.items[k].utt, y.items[k].utt);
      EXPECT_DOUBLE_EQ(x.items[k].gamma_p, y.items[k].gamma_p);
      EXPECT_DOUBLE_EQ(x.items[k].gamma_r, y.items[k].gamma_r);
      EXPECT_EQ(x.mask.row(k).sum(), static_cast<double>(x.lengths[k]));
    }
  }

  EXPECT_THROW(BatchStream(data, "test", 4, AugPolicy::Mixed, 1), Error);  // empty split
}
